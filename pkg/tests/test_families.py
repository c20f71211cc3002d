import pytest

from seqvote import network as net
from seqvote.families import (
    GenerationError,
    InstanceSpec,
    RandomSpec,
    agent_index,
    catalog_names,
    gen_paper_instance,
    gen_random,
)


def test_catalog_names_are_stable():
    assert catalog_names() == [
        "example1",
        "example2",
        "g_k",
        "h_k",
        "kapproval_chain",
        "plurality_chain",
        "plurality_chain_fig5",
    ]


def test_unknown_name_is_an_error():
    with pytest.raises(GenerationError, match="unknown"):
        gen_paper_instance(InstanceSpec("no_such_family"))


def test_k_is_required_only_where_it_applies():
    with pytest.raises(GenerationError):
        gen_paper_instance(InstanceSpec("g_k"))  # missing k
    with pytest.raises(GenerationError):
        gen_paper_instance(InstanceSpec("example1", 3))  # spurious k


def test_example1_structure():
    g = gen_paper_instance(InstanceSpec("example1"))
    assert g.n == 5
    assert net.popularity(g, agent_index(g, "5")) == 3
    assert all(
        net.popularity(g, a) <= 1 for a in range(g.n) if a != agent_index(g, "5")
    )


def test_example2_structure():
    g = gen_paper_instance(InstanceSpec("example2"))
    assert g.n == 4
    assert net.degree_profile(g).max_out == 1


def test_g_k_structure():
    g = gen_paper_instance(InstanceSpec("g_k", 2))
    assert g.n == 8
    profile = net.degree_profile(g)
    assert profile.max_out == 2
    assert net.popularity(g, agent_index(g, "c1")) == 4
    assert net.popularity(g, agent_index(g, "c3")) == 2
    # the confirmation chain between the c agents
    assert (agent_index(g, "c3"), agent_index(g, "c2")) in g.edges
    assert (agent_index(g, "c2"), agent_index(g, "c1")) in g.edges


@pytest.mark.parametrize("k", [2, 3, 4, 5])
def test_g_k_degree_formulas(k):
    g = gen_paper_instance(InstanceSpec("g_k", k))
    top = k * (k + 1) // 2 + k - 1
    assert net.popularity(g, agent_index(g, "c1")) == top
    assert net.popularity(g, agent_index(g, f"c{k + 1}")) == k * (k + 1) // 2 - 1
    assert net.degree_profile(g).max_out == 2


def test_plurality_chain_fig5_structure():
    g = gen_paper_instance(InstanceSpec("plurality_chain_fig5"))
    assert g.names[:6] == ("d1", "d2", "d3", "c3", "c2", "c1")
    assert net.popularity(g, agent_index(g, "c1")) == 3
    assert net.popularity(g, agent_index(g, "c3")) == 1


@pytest.mark.parametrize("k", [2, 3, 5])
def test_plurality_chain_structure(k):
    g = gen_paper_instance(InstanceSpec("plurality_chain", k))
    assert g.n == 2 * k + (k - 1)
    assert net.popularity(g, agent_index(g, "c1")) == k
    assert net.popularity(g, agent_index(g, f"c{k}")) == 1
    # ratio k for the narrated winner c_k
    assert net.ratio(g, agent_index(g, f"c{k}")) == k


@pytest.mark.parametrize("k", [1, 2, 3])
def test_kapproval_chain_structure(k):
    g = gen_paper_instance(InstanceSpec("kapproval_chain", k))
    assert g.n == 6 + k + 2 * (k - 1)
    assert net.popularity(g, agent_index(g, "c1")) == 3
    assert net.popularity(g, agent_index(g, "c3")) == 1
    assert net.ratio(g, agent_index(g, "c3")) == 3


@pytest.mark.parametrize("k", [2, 3, 4])
def test_h_k_degree_formulas(k):
    g = gen_paper_instance(InstanceSpec("h_k", k))
    assert net.popularity(g, agent_index(g, "m")) == 3 * k - 2
    for i in range(1, k + 1):
        assert net.popularity(g, agent_index(g, f"c{i}")) == 2 * k - 2


def test_h_k_m_leads_everyone_by_k():
    k = 3
    g = gen_paper_instance(InstanceSpec("h_k", k))
    m = agent_index(g, "m")
    lead = net.popularity(g, m) - max(
        net.popularity(g, a) for a in range(g.n) if a != m
    )
    assert lead == k


def test_small_k_rejected():
    with pytest.raises(GenerationError):
        gen_paper_instance(InstanceSpec("g_k", 1))
    with pytest.raises(GenerationError):
        gen_paper_instance(InstanceSpec("h_k", 1))
    with pytest.raises(GenerationError):
        gen_paper_instance(InstanceSpec("kapproval_chain", 0))


def test_agent_index_errors():
    g = gen_paper_instance(InstanceSpec("example1"))
    with pytest.raises(GenerationError):
        agent_index(g, "zz")


# -- random ensembles ------------------------------------------------------------


def test_random_is_seed_stable():
    spec = RandomSpec(n=6, p=0.4, max_out=None, seed=7)
    assert gen_random(spec) == gen_random(spec)


def test_random_seeds_differ():
    a = gen_random(RandomSpec(n=6, p=0.4, max_out=None, seed=7))
    b = gen_random(RandomSpec(n=6, p=0.4, max_out=None, seed=8))
    assert a != b


def test_random_respects_out_degree_cap():
    for seed in range(20):
        g = gen_random(RandomSpec(n=7, p=0.9, max_out=1, seed=seed))
        assert net.degree_profile(g).max_out <= 1


def test_random_extreme_probabilities():
    assert len(gen_random(RandomSpec(n=5, p=0.0, max_out=None, seed=1)).edges) == 0
    assert len(gen_random(RandomSpec(n=5, p=1.0, max_out=None, seed=1)).edges) == 20


def test_random_rejects_bad_params():
    with pytest.raises(GenerationError):
        gen_random(RandomSpec(n=0, p=0.5, max_out=None, seed=1))
    with pytest.raises(GenerationError):
        gen_random(RandomSpec(n=3, p=1.5, max_out=None, seed=1))
