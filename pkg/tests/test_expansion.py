import pytest

from storysearch.errors import InvalidInputError, UpstreamError
from storysearch.expansion import (
    ExpansionParams,
    build_backward_prompt,
    build_forward_prompt,
    expand_backward,
    expand_forward,
)
from storysearch.graph import EntityGraph, add_entity, summarize_for_prompt
from storysearch.llm import GENERATION_MARKER, MockProvider, ScriptedProvider
from storysearch.tree import Direction, add_event, ancestor_chain, chains_of_length, story_order_texts


def chain_of(tree, node_id):
    return ancestor_chain(tree, node_id)


class TestParams:
    @pytest.mark.parametrize("field,value", [("likelihood", 0), ("likelihood", 6), ("severity", 9), ("temperature", 2.1)])
    def test_range_validation(self, field, value):
        with pytest.raises(InvalidInputError):
            ExpansionParams(**{field: value})

    def test_defaults_valid(self):
        params = ExpansionParams()
        assert params.likelihood == 3 and params.severity == 3


class TestForwardPrompt:
    def test_root_only_chain_default_params(self, stub_tree):
        bundle = build_forward_prompt(chain_of(stub_tree, stub_tree.root_id), ExpansionParams(), [])
        assert "moves the plot forward" in bundle.user_text
        context = bundle.user_text.split(GENERATION_MARKER, 1)[1].split("--- INSTRUCTIONS ---")[0]
        numbered = [line for line in context.splitlines() if line.strip() and line[0].isdigit()]
        assert len(numbered) == 1
        assert numbered[0].startswith("1. ")
        assert bundle.direction is Direction.FORWARD

    def test_guide_prompt_appears_once(self, stub_tree):
        params = ExpansionParams(guide_prompt="Adopt a humorous tone.")
        bundle = build_forward_prompt(chain_of(stub_tree, stub_tree.root_id), params, [])
        assert bundle.user_text.count("Adopt a humorous tone.") == 1

    def test_likelihood_severity_lines(self, stub_tree):
        params = ExpansionParams(likelihood=5, severity=1)
        bundle = build_forward_prompt(chain_of(stub_tree, stub_tree.root_id), params, [])
        assert "Target event likelihood: 5/5" in bundle.user_text
        assert "Target event severity: 1/5" in bundle.user_text

    def test_avoid_list_has_one_bullet_per_guess(self, stub_tree):
        guesses = ["first guess", "second guess", "third guess"]
        bundle = build_forward_prompt(chain_of(stub_tree, stub_tree.root_id), ExpansionParams(), guesses)
        section = bundle.user_text.split("Avoid repeating these prior candidate events:", 1)[1]
        bullets = [line for line in section.splitlines() if line.startswith("- ")]
        assert len(bullets) == 3

    def test_no_avoid_section_without_guesses(self, stub_tree):
        bundle = build_forward_prompt(chain_of(stub_tree, stub_tree.root_id), ExpansionParams(), [])
        assert "Avoid repeating" not in bundle.user_text

    def test_graph_summary_section(self, stub_tree):
        graph = EntityGraph.empty(["person"], ["knows"])
        add_entity(graph, "Lily", "person")
        bundle = build_forward_prompt(
            chain_of(stub_tree, stub_tree.root_id),
            ExpansionParams(use_entity_graph=True),
            [],
            graph_summary=summarize_for_prompt(graph),
        )
        assert "Known entities and relationships:" in bundle.user_text
        assert "Lily (person)" in bundle.user_text

    def test_pure_and_deterministic(self, stub_tree):
        chain = chain_of(stub_tree, stub_tree.root_id)
        params = ExpansionParams(guide_prompt="Stay gentle.")
        a = build_forward_prompt(chain, params, ["g1"])
        b = build_forward_prompt(chain, params, ["g1"])
        assert a == b

    def test_empty_chain_rejected(self, stub_tree):
        from storysearch.tree import StoryChain

        with pytest.raises(InvalidInputError):
            build_forward_prompt(StoryChain([], []), ExpansionParams(), [])


class TestExpandForward:
    def test_adds_node_and_prior_guess(self, stub_tree, mock_provider):
        expand_forward(stub_tree, stub_tree.root_id, ExpansionParams(), None, mock_provider)
        assert len(stub_tree.nodes) == 2
        assert len(stub_tree.root.prior_guesses) == 1

    def test_second_call_avoids_first_result(self, stub_tree, mock_provider):
        first = expand_forward(stub_tree, stub_tree.root_id, ExpansionParams(), None, mock_provider)
        expand_forward(stub_tree, stub_tree.root_id, ExpansionParams(), None, mock_provider)
        second_prompt = mock_provider.transcript[1].user_text
        assert stub_tree.nodes[first].text in second_prompt

    def test_nine_calls_reach_ten_events(self, stub_tree, mock_provider):
        node = stub_tree.root_id
        for _ in range(9):
            node = expand_forward(stub_tree, node, ExpansionParams(), None, mock_provider)
        assert chains_of_length(stub_tree, 10)

    def test_atomic_on_provider_error(self, stub_tree):
        provider = ScriptedProvider([UpstreamError("down")])
        with pytest.raises(UpstreamError):
            expand_forward(stub_tree, stub_tree.root_id, ExpansionParams(), None, provider)
        assert len(stub_tree.nodes) == 1
        assert stub_tree.root.prior_guesses == []

    def test_prompt_contains_every_ancestor(self, stub_tree, mock_provider):
        node = stub_tree.root_id
        for _ in range(4):
            node = expand_forward(stub_tree, node, ExpansionParams(), None, mock_provider)
        last_prompt = mock_provider.transcript[-1].user_text
        chain = ancestor_chain(stub_tree, node)
        for text in chain.texts[:-1]:
            assert text in last_prompt


class TestExpandBackward:
    def test_backward_child_direction(self, stub_tree, mock_provider):
        node_id = expand_backward(stub_tree, stub_tree.root_id, ExpansionParams(), None, mock_provider)
        assert stub_tree.nodes[node_id].direction is Direction.BACKWARD

    def test_backward_does_not_record_prior_guess(self, stub_tree, mock_provider):
        expand_backward(stub_tree, stub_tree.root_id, ExpansionParams(), None, mock_provider)
        assert stub_tree.root.prior_guesses == []

    def test_backward_text_rendered_before_parent(self, stub_tree, mock_provider):
        cause = expand_backward(stub_tree, stub_tree.root_id, ExpansionParams(), None, mock_provider)
        chain = ancestor_chain(stub_tree, cause)
        ordered = story_order_texts(stub_tree, chain)
        assert ordered.index(stub_tree.nodes[cause].text) < ordered.index(stub_tree.root.text)

    def test_depth_three_prompt_includes_all_ancestors(self, stub_tree, mock_provider):
        a = add_event(stub_tree, stub_tree.root_id, "Ancestor a.", Direction.FORWARD)
        b = add_event(stub_tree, a, "Ancestor b.", Direction.FORWARD)
        expand_backward(stub_tree, b, ExpansionParams(), None, mock_provider)
        prompt = mock_provider.transcript[-1].user_text
        for text in (stub_tree.root.text, "Ancestor a.", "Ancestor b."):
            assert text in prompt

    def test_backward_prompt_asks_for_cause(self, stub_tree):
        bundle = build_backward_prompt(chain_of(stub_tree, stub_tree.root_id), ExpansionParams())
        assert "CAUSED" in bundle.user_text
        assert bundle.direction is Direction.BACKWARD
