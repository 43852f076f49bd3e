from fractions import Fraction
import itertools

from hypothesis import given, strategies as st
import pytest

from freeprob.errors import InvalidInputError, ResourceLimitError, TracialityError
from freeprob.freecum import (CumulantFunctional, Letter, MomentFunctional, balanced_words,
                              check_r_diagonal, circular, circular_free_poisson,
                              circular_moments, composite_functional, cumulants_to_moment,
                              evaluate_compound, free_poisson, free_product,
                              freeness_diagnostic_exact, haar_unitary, is_balanced,
                              joint_free_functional, load_functional, mixed_moment_free,
                              moments_to_cumulant, parse_word, product_cumulant_ks,
                              scalar_cumulants, scalar_moments, semicircular)
from freeprob.ncpart import SetPartition, enumerate_noncrossing, refines

rationals = st.fractions(min_value=-6, max_value=6, max_denominator=7)


def power_table(gen, moments):
    return {",".join([gen] * (k + 1)): m for k, m in enumerate(moments)}


def a(n, g="a"):
    return (Letter(g),) * n


# -- moments <-> cumulants ------------------------------------------------------------

def test_second_cumulant_is_variance():
    m1, m2 = Fraction(3, 2), Fraction(7, 3)
    phi = MomentFunctional(["a"], table=power_table("a", [m1, m2]))
    assert moments_to_cumulant(phi, "a,a") == m2 - m1 ** 2
    assert moments_to_cumulant(phi, "a") == m1


def test_semicircle_cumulants():
    assert scalar_cumulants([0, 1, 0, 2, 0, 5]) == [0, 1, 0, 0, 0, 0]


def test_catalan_moments_give_unit_cumulants():
    assert scalar_cumulants([1, 2, 5, 14]) == [1, 1, 1, 1]


def test_constant_cumulants_third_moment():
    for c in (Fraction(2), Fraction(1, 3), Fraction(-5, 2)):
        assert scalar_moments([c] * 3)[2] == c + 3 * c ** 2 + c ** 3
    assert scalar_moments([2] * 3)[2] == 22


def test_pure_second_cumulant_fourth_moment():
    assert scalar_moments([0, 1, 0, 0])[3] == 2


def test_point_mass_moments():
    lam = Fraction(-4, 3)
    assert scalar_moments([lam, 0, 0, 0, 0]) == [lam ** k for k in range(1, 6)]


def test_order_overflow():
    phi = MomentFunctional(["a"], table=power_table("a", [1, 2]))
    with pytest.raises(ResourceLimitError):
        moments_to_cumulant(phi, "a,a,a")
    with pytest.raises(InvalidInputError):
        moments_to_cumulant(phi, "")


def test_float_input_rejected_in_exact_mode():
    with pytest.raises(InvalidInputError):
        MomentFunctional(["a"], table={"a": 0.5})


def test_empty_cumulant_undefined():
    with pytest.raises(InvalidInputError):
        semicircular()(())
    assert cumulants_to_moment(semicircular(), ()) == 1


@given(st.lists(rationals, min_size=1, max_size=7))
def test_round_trip_single_generator(ms):
    phi = MomentFunctional(["a"], table=power_table("a", ms))
    kap = CumulantFunctional.from_moments(phi)
    back = MomentFunctional.from_cumulants(kap)
    for n in range(1, len(ms) + 1):
        assert back(a(n)) == ms[n - 1]


@given(st.lists(rationals, min_size=4, max_size=4))
def test_round_trip_two_letter_words(vals):
    # values on words of length <= 2 over {a, b}; missing words default to a rational
    words = ["a", "b", "a,b", "b,a"]
    table = dict(zip(words, vals))
    phi = MomentFunctional(["a", "b"], table=table, default=Fraction(1, 2), max_order=3)
    kap = CumulantFunctional.from_moments(phi)
    for w in phi.words(1) + phi.words(2) + phi.words(3):
        assert cumulants_to_moment(kap, w) == phi(w)


# -- cyclicity ---------------------------------------------------------------------------

def _necklace(w):
    return min(w[k:] + w[:k] for k in range(len(w)))


@given(st.data())
def test_cyclic_property_of_tracial_cumulants(data):
    letters = [Letter("a"), Letter("a", True)]
    table = {}
    for n in range(1, 6):
        for w in itertools.product(letters, repeat=n):
            key = _necklace(w)
            if key not in table:
                table[key] = data.draw(rationals)
    phi = MomentFunctional(["a"], table={",".join(map(str, w)): table[_necklace(w)]
                                         for n in range(1, 6)
                                         for w in itertools.product(letters, repeat=n)},
                           tracial=True)
    kap = CumulantFunctional.from_moments(phi)
    for w in phi.words(5)[::3] + phi.words(4):
        assert kap(w) == kap(w[-1:] + w[:-1])


def test_cyclic_property_on_free_product_to_order_6():
    phi = free_product([MomentFunctional.from_cumulants(semicircular("s")),
                        MomentFunctional.from_cumulants(free_poisson(2, "p"))])
    kap = CumulantFunctional.from_moments(phi)
    for w in itertools.product([Letter("s"), Letter("p")], repeat=6):
        assert kap(w) == kap(w[-1:] + w[:-1])


def test_traciality_is_verified():
    table = {"a": 1, "a*": 1, "a,a*": 2, "a*,a": 3}
    phi = MomentFunctional(["a"], table=table, tracial=True, default=0)
    with pytest.raises(TracialityError):
        phi("a,a*")


# -- evaluate_compound --------------------------------------------------------------------

def test_evaluate_compound_examples():
    phi = MomentFunctional(["a", "b"], table={"a": 2, "b": 3, "a,a": 5, "a,b,a": 7},
                           default=0)
    w = parse_word("a,b,a")
    assert evaluate_compound(phi, SetPartition.singletons([1, 2, 3]), w) == 12
    assert evaluate_compound(phi, SetPartition.one([1, 2, 3]), w) == 7
    assert evaluate_compound(phi, SetPartition([[1, 3], [2]]), w) == 15
    with pytest.raises(InvalidInputError):
        evaluate_compound(phi, SetPartition([[1, 2]]), w)


# -- Krawczyk-Speicher ---------------------------------------------------------------------

def test_ks_pair_equals_moment():
    phi = MomentFunctional(["a", "b"], table={"a": 2, "b": -1, "a,b": 5}, default=0)
    kap = CumulantFunctional.from_moments(phi)
    assert product_cumulant_ks(kap, [(1, 2)], "a,b") == 5


def test_ks_haar_unit_product_vanishes():
    kap = CumulantFunctional.from_moments(haar_unitary())
    assert product_cumulant_ks(kap, [(1, 2), (3, 4)], "u,u*,u,u*") == 0


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_ks_semicircle_squares_free_poisson(n):
    grouping = [(2 * k + 1, 2 * k + 2) for k in range(n)]
    assert product_cumulant_ks(semicircular(), grouping, a(2 * n, "s")) == 1


def test_ks_grouping_validation():
    kap = semicircular()
    with pytest.raises(InvalidInputError):
        product_cumulant_ks(kap, [(1, 3), (2,)], a(3, "s"))
    with pytest.raises(InvalidInputError):
        product_cumulant_ks(kap, [(1, 2)], a(3, "s"))


def _groupings(n):
    for cuts in itertools.product([False, True], repeat=n - 1):
        groups, cur = [], [1]
        for i, cut in enumerate(cuts, start=2):
            if cut:
                groups.append(tuple(cur))
                cur = [i]
            else:
                cur.append(i)
        groups.append(tuple(cur))
        yield groups


@given(st.lists(rationals, min_size=6, max_size=6), st.integers(2, 6))
def test_ks_equals_regrouped_cumulant(ms, n):
    phi = MomentFunctional(["a"], table=power_table("a", ms))
    kap = CumulantFunctional.from_moments(phi)
    for grouping in _groupings(n):
        elements = {f"g{i}": ",".join(["a"] * len(g)) for i, g in enumerate(grouping)}
        comp = composite_functional(phi, elements)
        direct = moments_to_cumulant(comp, [Letter(f"g{i}") for i in range(len(grouping))])
        assert product_cumulant_ks(kap, grouping, a(n)) == direct


# -- free families -------------------------------------------------------------------------

def _two_generator_free():
    ka = CumulantFunctional(["a"], table=power_table("a", [Fraction(1, 2), 3, -1, 2]))
    kb = CumulantFunctional(["b"], table=power_table("b", [Fraction(-2, 3), 1, 4, 5]))
    return ka, kb


def test_joint_free_abab_formula():
    ka, kb = _two_generator_free()
    joint = joint_free_functional([ka, kb])
    phi = MomentFunctional.from_cumulants(joint)
    pa, pb = MomentFunctional.from_cumulants(ka), MomentFunctional.from_cumulants(kb)
    a1, a2, b1, b2 = pa("a"), pa("a,a"), pb("b"), pb("b,b")
    assert phi("a,b,a,b") == a2 * b1 ** 2 + a1 ** 2 * b2 - a1 ** 2 * b1 ** 2
    assert phi("a,b") == a1 * b1


def test_joint_free_single_part_is_identity():
    ka, _ = _two_generator_free()
    joint = joint_free_functional([ka])
    for n in range(1, 5):
        assert joint(a(n)) == ka(a(n))


def test_joint_free_alphabet_collision():
    with pytest.raises(InvalidInputError):
        joint_free_functional([semicircular("s"), free_poisson(1, "s")])


def test_mixed_moment_free_examples():
    ka, kb = _two_generator_free()
    pa = MomentFunctional.from_cumulants(ka)
    pb = MomentFunctional.from_cumulants(kb)
    assert mixed_moment_free(pa, kb, "a,b,a") == pa("a,a") * pb("b")
    # a projection q with phi(q) = t: every moment equals t
    t = Fraction(2, 7)
    q = MomentFunctional(["q"], rule=lambda w: t)
    # both partitions of the b-positions leave q in one block: t * phi(b b)
    assert mixed_moment_free(q, kb, "b,q,b") == t * (kb("b,b") + kb("b") ** 2)
    assert mixed_moment_free(q, kb, "b,q,b") == t * pb("b,b")
    joint = MomentFunctional.from_cumulants(joint_free_functional([ka, kb]))
    assert mixed_moment_free(pa, kb, "a,b,a,b") == joint("a,b,a,b")


def test_mixed_moment_free_rejects_non_alternating():
    ka, kb = _two_generator_free()
    with pytest.raises(InvalidInputError):
        mixed_moment_free(MomentFunctional.from_cumulants(ka), kb, "a,a,b")


def _alternating_patterns(total):
    for start in "ab":
        other = "b" if start == "a" else "a"
        yield ",".join(start if k % 2 == 0 else other for k in range(total))


@pytest.mark.parametrize("total", range(1, 9))
def test_mixed_moment_free_matches_joint(total):
    ka = CumulantFunctional(["a", "c"], table={"a": 1, "c": 2, "a,a": 3, "a,c": -1,
                                                "c,a": -1, "c,c": 1}, default=Fraction(1, 2),
                            max_order=8)
    kb = CumulantFunctional(["b"], table=power_table("b", [2, -1, 3, 1, 2, 1, 1, 1]))
    pa = MomentFunctional.from_cumulants(ka)
    joint = MomentFunctional.from_cumulants(joint_free_functional([ka, kb]))
    for pat in _alternating_patterns(total):
        # vary the a-letters between a and c
        slots = [i for i, x in enumerate(pat.split(",")) if x == "a"]
        for choice in itertools.product("ac", repeat=len(slots)):
            letters = pat.split(",")
            for i, ch in zip(slots, choice):
                letters[i] = ch
            w = ",".join(letters)
            assert mixed_moment_free(pa, kb, w) == joint(w), w


# -- balanced sequences and R-diagonality ----------------------------------------------------

def test_is_balanced_examples():
    assert is_balanced((-1, 1))
    assert not is_balanced((1, -1))
    assert is_balanced((-1, -1, 1, 1))
    assert not is_balanced((-1, 1, -1))
    with pytest.raises(InvalidInputError):
        is_balanced(())


def test_balanced_words_counts():
    # Catalan numbers: balanced sequences are Dyck paths read backwards
    assert [sum(1 for w in balanced_words("a", n) if len(w) == n) for n in (2, 4, 6)] == [1, 2, 5]


def test_haar_unitary_r_diagonal_to_order_8():
    rep = check_r_diagonal(haar_unitary(), 8)
    assert rep.passed and not rep.violations
    assert rep.alternating["u,u*"] == 1


def test_u_plus_one_fails_at_order_1():
    def rule(w):
        # expand (u + 1)^{s_1} ... and apply the Haar rule to each term
        total = 0
        for pick in itertools.product([0, 1], repeat=len(w)):
            total += int(sum(l.sign for l, p in zip(w, pick) if p) == 0)
        return total
    rep = check_r_diagonal(MomentFunctional(["v"], rule=rule, tracial=True), 3)
    assert not rep.passed and rep.first_failure_order == 1


def test_circular_passes():
    rep = check_r_diagonal(circular_moments(), 6)
    assert rep.passed
    assert rep.alternating["c,c*"] == 1 and rep.alternating["c,c*,c,c*"] == 0


def test_circular_counting_rule_matches_cumulants():
    direct = circular_moments("c")
    via = MomentFunctional.from_cumulants(circular("c"))
    for n in range(1, 7):
        for w in direct.words(n):
            assert direct(w) == via(w)


def test_check_r_diagonal_needs_one_generator():
    with pytest.raises(InvalidInputError):
        check_r_diagonal(MomentFunctional(["a", "b"], rule=lambda w: 0), 2)


def _level_partition(signs):
    levels = []
    acc = 0
    for t in signs:
        levels.append(Fraction(2 * acc + t, 2))
        acc += t
    groups = {}
    for i, v in enumerate(levels, start=1):
        groups.setdefault(v, []).append(i)
    return SetPartition(groups.values(), range(1, len(signs) + 1))


@pytest.mark.parametrize("n", range(1, 7))
def test_vanishing_lemma(n):
    kap = circular_free_poisson(2)
    for w in kap.words(n):
        signs = [l.sign for l in w]
        sigma = _level_partition(signs)
        for pi in enumerate_noncrossing(n):
            if evaluate_compound(kap, pi, w) != 0:
                assert sum(signs) == 0 and refines(pi, sigma)


# -- freeness diagnostic ----------------------------------------------------------------------

def test_freeness_of_joint_free_functional_is_exact_zero():
    ka, kb = _two_generator_free()
    phi = MomentFunctional.from_cumulants(joint_free_functional([ka, kb]))
    rep = freeness_diagnostic_exact(phi, [["a"], ["b"]], 4)
    assert rep.all_zero and rep.max_abs == 0 and rep.mixed_count > 0


def test_same_generator_in_both_families_is_not_free():
    phi = MomentFunctional.from_cumulants(semicircular("s"))
    rep = freeness_diagnostic_exact(phi, [["s"], ["s"]], 2)
    assert not rep.all_zero and rep.max_abs == pytest.approx(1.0)


@pytest.mark.parametrize("phi", [haar_unitary("a"), circular_moments("a")],
                         ids=["haar", "circular"])
def test_aa_star_free_from_balanced_words(phi):
    fam_b = [w for w in balanced_words("a", 4)]
    rep = freeness_diagnostic_exact(phi, [["a,a*"], fam_b[:2]], 4)
    assert rep.all_zero


def test_commuting_diagonal_family_is_not_free():
    # a and a* of a Haar unitary: mixed second cumulant kappa(u, u*) = 1
    rep = freeness_diagnostic_exact(haar_unitary(), [["u"], ["u*"]], 2)
    assert not rep.all_zero


# -- JSON -------------------------------------------------------------------------------------

def test_load_functional():
    phi = load_functional('{"alphabet": ["a"], "moments": {"a": "1/2", "a,a*": "3/2"}}')
    assert phi("a") == Fraction(1, 2) and phi("a,a*") == Fraction(3, 2)
    with pytest.raises(InvalidInputError):
        load_functional({"alphabet": ["a"], "moments": {}, "bogus": 1})
    with pytest.raises(InvalidInputError):
        load_functional({"alphabet": ["a"], "moments": {"b": 1}})
