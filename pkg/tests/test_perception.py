"""Ring perception, aromaticity, conjugation, hybridization, stereo."""

import pytest

from molgnn import parse_smiles
from molgnn.molecule import BondOrder, BondStereo, Hybridization


class TestRings:
    def test_acyclic_has_no_rings(self):
        mol = parse_smiles("CCO")
        assert mol.rings == ()
        assert not any(a.in_ring for a in mol.atoms)
        assert not any(b.in_ring for b in mol.bonds)

    def test_cyclohexane_single_ring(self):
        mol = parse_smiles("C1CCCCC1")
        assert len(mol.rings) == 1
        assert len(mol.rings[0]) == 6
        assert all(a.in_ring for a in mol.atoms)

    def test_ring_count_is_cyclomatic_number(self):
        for smiles, expected in [
            ("c1ccc2ccccc2c1", 2),           # naphthalene
            ("C1CC2CCC1CC2", 2),             # bicyclooctane
            ("c1ccc2c(c1)oc1ccccc12", 3),    # dibenzofuran
            ("C1CC12CC2", 2),                # spiro
        ]:
            mol = parse_smiles(smiles)
            assert len(mol.rings) == expected, smiles
            assert len(mol.rings) == mol.num_bonds - mol.num_atoms + 1

    def test_sssr_prefers_small_rings(self):
        # fused bicyclic: SSSR is two 6-rings, never the 10-membered envelope
        mol = parse_smiles("C1CCC2CCCCC2C1")
        assert sorted(len(r) for r in mol.rings) == [6, 6]

    def test_ring_membership_flags_match_bonds(self):
        mol = parse_smiles("CC1CCCCC1")  # methylcyclohexane
        assert not mol.atoms[0].in_ring
        assert all(a.in_ring for a in mol.atoms[1:])
        ring_bonds = [b for b in mol.bonds if b.in_ring]
        assert len(ring_bonds) == 6


class TestAromaticity:
    def test_kekule_benzene_perceived(self):
        mol = parse_smiles("C1=CC=CC=C1")
        assert all(a.aromatic for a in mol.atoms)
        assert all(b.order is BondOrder.AROMATIC for b in mol.bonds)
        assert [a.implicit_h for a in mol.atoms] == [1] * 6

    def test_cyclohexane_not_aromatic(self):
        mol = parse_smiles("C1CCCCC1")
        assert not any(a.aromatic for a in mol.atoms)

    def test_cyclohexadiene_not_aromatic(self):
        mol = parse_smiles("C1=CCC=CC1")
        assert not any(a.aromatic for a in mol.atoms)

    def test_heteroaromatics(self):
        for smiles, n_aromatic in [
            ("c1cc[nH]c1", 5),   # pyrrole
            ("c1ccoc1", 5),      # furan
            ("c1ccsc1", 5),      # thiophene
            ("c1ccncc1", 6),     # pyridine
            ("c1cnc[nH]1", 5),   # imidazole
            ("c1cscn1", 5),      # thiazole
        ]:
            mol = parse_smiles(smiles)
            assert sum(a.aromatic for a in mol.atoms) == n_aromatic, smiles

    def test_kekule_heteroaromatics_perceived(self):
        mol = parse_smiles("C1=CC=CN1")  # pyrrole written without brackets
        assert all(a.aromatic for a in mol.atoms)
        n_atom = next(a for a in mol.atoms if a.element == "N")
        assert n_atom.implicit_h == 1

    def test_kekule_naphthalene_fused(self):
        mol = parse_smiles("C1=CC2=CC=CC=C2C=C1")
        assert all(a.aromatic for a in mol.atoms)

    def test_pyridinone_aromatic_by_lone_pair(self):
        mol = parse_smiles("O=C1C=CC=CN1")
        ring_atoms = [a for a in mol.atoms if a.in_ring]
        assert all(a.aromatic for a in ring_atoms)
        oxo = next(a for a in mol.atoms if a.element == "O")
        assert not oxo.aromatic

    def test_quinone_not_aromatic(self):
        mol = parse_smiles("O=C1C=CC(=O)C=C1")
        assert not any(a.aromatic for a in mol.atoms)

    def test_charged_aromatics(self):
        # tropylium cation and cyclopentadienide anion both satisfy 4n+2
        mol = parse_smiles("[CH+]1C=CC=CC=C1")
        assert all(a.aromatic for a in mol.atoms)
        mol = parse_smiles("[CH-]1C=CC=C1")
        assert all(a.aromatic for a in mol.atoms)

    def test_biphenyl_junction_single(self):
        mol = parse_smiles("c1ccccc1c1ccccc1")
        junction = [b for b in mol.bonds if not b.in_ring]
        assert len(junction) == 1
        assert junction[0].order is BondOrder.SINGLE
        assert all(a.aromatic for a in mol.atoms)

    def test_exocyclic_substituent_not_aromatic(self):
        mol = parse_smiles("Cc1ccccc1")
        assert not mol.atoms[0].aromatic
        assert sum(a.aromatic for a in mol.atoms) == 6


class TestConjugation:
    def find_bond(self, mol, a_el, b_el, order=None):
        for b in mol.bonds:
            els = {mol.atoms[b.a].element, mol.atoms[b.b].element}
            if els == {a_el, b_el} and (order is None or b.order is order):
                return b
        raise AssertionError("bond not found")

    def test_aromatic_bonds_conjugated(self):
        mol = parse_smiles("c1ccccc1")
        assert all(b.conjugated for b in mol.bonds)

    def test_butadiene_fully_conjugated(self):
        mol = parse_smiles("C=CC=C")
        assert all(b.conjugated for b in mol.bonds)

    def test_isolated_double_not_conjugated(self):
        mol = parse_smiles("C=C")
        assert not mol.bonds[0].conjugated
        mol = parse_smiles("CC(C)=O")  # acetone carbonyl
        carbonyl = self.find_bond(mol, "C", "O", BondOrder.DOUBLE)
        assert not carbonyl.conjugated

    def test_ester_conjugation(self):
        mol = parse_smiles("COC(C)=O")  # methyl acetate
        carbonyl = self.find_bond(mol, "C", "O", BondOrder.DOUBLE)
        assert carbonyl.conjugated
        # the C-O single bond on the carbonyl side is conjugated too
        single_co = [
            b for b in mol.bonds
            if b.order is BondOrder.SINGLE
            and {mol.atoms[b.a].element, mol.atoms[b.b].element} == {"C", "O"}
        ]
        assert any(b.conjugated for b in single_co)

    def test_hydrazine_not_conjugated(self):
        mol = parse_smiles("NN")
        assert not mol.bonds[0].conjugated

    def test_aniline_cn_conjugated(self):
        mol = parse_smiles("Nc1ccccc1")
        cn = self.find_bond(mol, "N", "C", BondOrder.SINGLE)
        assert cn.conjugated


class TestHybridization:
    def get(self, smiles, element, occurrence=0):
        mol = parse_smiles(smiles)
        matches = [a for a in mol.atoms if a.element == element]
        return matches[occurrence].hybridization

    def test_carbon_series(self):
        assert self.get("CC", "C") is Hybridization.SP3
        assert self.get("C=C", "C") is Hybridization.SP2
        assert self.get("C#C", "C") is Hybridization.SP

    def test_aromatic_is_sp2(self):
        assert self.get("c1ccccc1", "C") is Hybridization.SP2

    def test_heteroatoms(self):
        assert self.get("CCO", "O") is Hybridization.SP3
        assert self.get("CC=O", "O") is Hybridization.SP2
        assert self.get("CC#N", "N") is Hybridization.SP
        assert self.get("CN(C)C", "N") is Hybridization.SP3
        assert self.get("CS(C)(=O)=O", "S") is Hybridization.SP3


class TestBondStereo:
    def stereo_of_double(self, smiles):
        mol = parse_smiles(smiles)
        return next(b.stereo for b in mol.bonds if b.order is BondOrder.DOUBLE)

    def test_trans(self):
        assert self.stereo_of_double("F/C=C/F") is BondStereo.E

    def test_cis(self):
        assert self.stereo_of_double("F/C=C\\F") is BondStereo.Z

    def test_unmarked_is_none(self):
        assert self.stereo_of_double("FC=CF") is BondStereo.NONE

    def test_one_sided_mark_is_none(self):
        assert self.stereo_of_double("F/C=CF") is BondStereo.NONE
