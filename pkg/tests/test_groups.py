"""Group arithmetic: axioms, canonical forms, and independent oracles."""

import random
from fractions import Fraction

import pytest

import centerwalk as cw
from centerwalk.groups import split_generator_literals


def random_element(group, rng, length=8):
    gens = GENS[group.spec_string]
    out = group.identity
    for _ in range(rng.randrange(length + 1)):
        g = rng.choice(gens)
        out = group.multiply(out, g if rng.random() < 0.5 else group.inverse(g))
    return out


GROUPS = {
    "z:2": cw.IntegerLattice(2),
    "heisenberg": cw.Heisenberg(),
    "bs:2": cw.BaumslagSolitar(2),
    "bs:3": cw.BaumslagSolitar(3),
    "wreath": cw.WreathZZ(),
    "f2": cw.FreeGroup(),
    "zmod:5": cw.FiniteCyclic(5),
}

GENS = {
    "z:2": ((1, 0), (0, 1)),
    "heisenberg": ((1, 0, 0), (0, 1, 0)),
    "bs:2": ((0, 0, 1), (0, 1, 0)),
    "bs:3": ((0, 0, 1), (0, 1, 0)),
    "wreath": ((1, ()), (0, ((0, 1),))),
    "f2": ((1,), (2,)),
    "zmod:5": (1, 2),
}


@pytest.mark.parametrize("spec", sorted(GROUPS))
def test_group_axioms(spec):
    group = GROUPS[spec]
    rng = random.Random(hash(spec) & 0xFFFF)
    e = group.identity
    for _ in range(1000):
        x = random_element(group, rng)
        y = random_element(group, rng)
        z = random_element(group, rng)
        assert group.multiply(group.multiply(x, y), z) == group.multiply(x, group.multiply(y, z))
        assert group.multiply(x, group.inverse(x)) == e
        assert group.multiply(group.inverse(x), x) == e
        assert group.multiply(x, e) == x and group.multiply(e, x) == x


@pytest.mark.parametrize("spec", sorted(GROUPS))
def test_canonical_forms_validate(spec):
    group = GROUPS[spec]
    rng = random.Random(1 + (hash(spec) & 0xFFFF))
    for _ in range(300):
        x = random_element(group, rng)
        assert group.validate(x) == x
        assert group.validate(group.inverse(x)) == group.inverse(x)


def test_heisenberg_matrix_oracle():
    import numpy as np

    group = cw.Heisenberg()

    def mat(g):
        a, b, c = g
        return np.array([[1, a, c], [0, 1, b], [0, 0, 1]], dtype=object)

    rng = random.Random(5)
    for _ in range(300):
        x = random_element(group, rng)
        y = random_element(group, rng)
        p = group.multiply(x, y)
        assert (mat(p) == mat(x) @ mat(y)).all()
    # the commutator of the two standard generators is central
    x, y = (1, 0, 0), (0, 1, 0)
    comm = group.product([x, y, group.inverse(x), group.inverse(y)])
    assert comm == (0, 0, 1)
    for _ in range(100):
        z = random_element(group, rng)
        assert group.multiply(comm, z) == group.multiply(z, comm)


def test_bs_relation_and_normal_form():
    for q in (2, 3):
        group = cw.BaumslagSolitar(q)
        a, b = group.gen_a, group.gen_b
        lhs = group.multiply(a, b)
        rhs = group.multiply(group.power(b, q), a)
        assert lhs == rhs
        # normal form is minimal: q never divides m when l > 0
        rng = random.Random(q)
        for _ in range(500):
            x = random_element(group, rng, length=12)
            l, m, k = x
            assert l >= 0 and (l == 0 or m % q != 0)


def test_bs_affine_oracle():
    # x -> q^s x + r with r = m / q^l, under functional composition
    for q in (2, 3):
        group = cw.BaumslagSolitar(q)

        def affine(g):
            l, m, k = g
            return (k, Fraction(m, q ** l))

        def compose(f1, f2):
            s1, r1 = f1
            s2, r2 = f2
            return (s1 + s2, r1 + Fraction(q) ** s1 * r2)

        rng = random.Random(11 * q)
        letters = [group.gen_a, group.gen_b, group.inverse(group.gen_a), group.inverse(group.gen_b)]
        for _ in range(500):
            word = [rng.choice(letters) for _ in range(rng.randrange(1, 14))]
            prod = group.product(word)
            oracle = (0, Fraction(0))
            for w in word:
                oracle = compose(oracle, affine(w))
            assert affine(prod) == oracle


def test_wreath_action_convention():
    group = cw.WreathZZ()
    g1, g2 = cw.WREATH_LAMP_PAIR
    x = group.multiply(group.identity, g1)
    assert x == (2, ((1, 1),))
    x = group.multiply(x, g1)  # second lamp lands at 2 + 1 = 3
    assert x == (4, ((1, 1), (3, 1)))
    x = group.multiply(x, g2)  # lamp -1 lands at the current shift 4
    assert x == (2, ((1, 1), (3, 1), (4, -1)))
    assert group.multiply(x, group.inverse(x)) == group.identity


def test_free_group_reduction():
    f2 = cw.FreeGroup()
    a, b = (1,), (2,)
    assert f2.multiply(a, f2.inverse(a)) == ()
    w = f2.parse_element("abA B")
    assert w == (1, 2, -1, -2)
    assert f2.format_element(w) == "abAB"
    assert f2.parse_element("aA") == ()


def test_abelianization_images():
    f2 = cw.FreeGroup()
    comm = f2.parse_element("aabab AABAB".replace(" ", ""))
    # [a^2, bab] lies in the commutator subgroup
    assert f2.abelianization(comm).free == (0, 0)
    wr = cw.WreathZZ()
    g1 = (2, ((1, 1),))
    assert wr.abelianization(g1).free == (2, 1)
    z2 = cw.IntegerLattice(2)
    assert z2.abelianization(z2.identity).free == (0, 0)
    h = cw.Heisenberg()
    assert h.abelianization((3, -4, 99)).free == (3, -4)
    bs = cw.BaumslagSolitar(3)
    img = bs.abelianization(bs.multiply(bs.gen_b, bs.gen_a))
    assert img.free == (1,) and img.torsion == (1,) and img.moduli == (2,)
    z5 = cw.FiniteCyclic(5)
    assert z5.abelianization(3).torsion == (3,)


def test_finite_cyclic_orders():
    z6 = cw.FiniteCyclic(6)
    assert [z6.order(x) for x in z6.elements()] == [1, 6, 3, 2, 3, 6]


def test_group_from_spec_and_parsing():
    g = cw.group_from_spec("z:3")
    assert isinstance(g, cw.IntegerLattice) and g.d == 3
    assert g.parse_element("[1, 0, -2]") == (1, 0, -2)
    assert isinstance(cw.group_from_spec("bs:4"), cw.BaumslagSolitar)
    wr = cw.group_from_spec("wreath")
    assert wr.parse_element("(2, {1: 1})") == (2, ((1, 1),))
    with pytest.raises(cw.InputParseError):
        cw.group_from_spec("so3")
    with pytest.raises(cw.InputParseError):
        cw.group_from_spec("bs:x")
    with pytest.raises(cw.InputParseError):
        wr.parse_element("(2, [1])")


def test_generator_literal_splitting():
    assert split_generator_literals("[1],[1],[-2]") == ["[1]", "[1]", "[-2]"]
    assert split_generator_literals("(2, {1: 1}), (-2, {0: -1})") == [
        "(2, {1: 1})", "(-2, {0: -1})"
    ]
    with pytest.raises(cw.InputParseError):
        split_generator_literals("[1,,")
    z1 = cw.group_from_spec("z:1")
    assert cw.parse_generators(z1, "[1],[1],[-2]") == ((1,), (1,), (-2,))


def test_mixed_group_rejected():
    h = cw.Heisenberg()
    with pytest.raises(cw.StructuralError):
        h.validate((1, 2))
    f2 = cw.FreeGroup()
    with pytest.raises(cw.StructuralError):
        f2.validate((1, -1))  # unreduced
    with pytest.raises(cw.StructuralError):
        cw.WreathZZ().validate((0, ((1, 0),)))  # zero lamp stored


def test_exact_metrics():
    z2 = cw.IntegerLattice(2)
    metric = z2.exact_metric(((1, 0), (-1, 0), (0, 1), (0, -1)))
    assert metric((3, -4)) == 7
    assert z2.exact_metric(((1, 0), (0, 1))) is None
    f2 = cw.FreeGroup()
    assert f2.exact_metric(((1,), (-1,), (2,), (-2,)))((1, 2, 1)) == 3
    wr = cw.WreathZZ()
    assert wr.distance_lower_bound((2, ((1, 1), (4, -1)))) == 4
