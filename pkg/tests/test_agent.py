import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vaxrag.agent import (
    Agent,
    AgentTrace,
    ConversationState,
    Response,
    ToolName,
    trim_history,
    validate_citations_response,
    validate_citations_tool,
)
from vaxrag.citations import Reference
from vaxrag.corpus import CollectionId, Document, ingest_batch, parse_timestamp
from vaxrag.embed import DeterministicEmbedder
from vaxrag.errors import SchemaError
from vaxrag.llm import ChatRequest, RuleProvider, ScriptedProvider
from vaxrag.vectorstore import SearchHit, SearchQuery, VectorStore

DIM = 32
EMBEDDER = DeterministicEmbedder(DIM)


def _doc(doc_id, collection, text, author_ref=None, ts="2024-06-01T00:00:00Z"):
    return Document(
        id=doc_id, collection=collection, text=text, lang="en",
        timestamp=parse_timestamp(ts), source="fixture", author_ref=author_ref,
    )


def _mini_store():
    store = VectorStore(DIM)
    papers = [
        _doc("paper-a", CollectionId.PAPERS, "Vaccine efficacy stays above ninety percent."),
        _doc("paper-b", CollectionId.PAPERS, "Adverse events remain rare in surveillance."),
        _doc("paper-c", CollectionId.PAPERS, "Catch-up schedules protect young adults."),
    ]
    posts = [
        _doc(f"post-{i}", CollectionId.SOCIAL, f"接種の話題 その{i} みんなどう思う?",
             author_ref=f"anon{i:02d}af{i}")
        for i in range(5)
    ]
    news = [_doc("news-a", CollectionId.NEWS, "City restarts vaccination notices.")]
    ingest_batch(papers + posts + news, store, EMBEDDER)
    return store


STORE = _mini_store()


def _agent(provider, store=STORE, **kw):
    return Agent(store, EMBEDDER, provider, **kw)


def _select(tool, query="vaccine efficacy"):
    return ("TASK: agent_select_action",
            json.dumps({"thought": "t", "tool": tool, "query": query}))


SUFFICIENT = ("TASK: agent_sufficiency", '{"sufficient": true}')


class TestRunTurn:
    def test_papers_flow_forced_by_script(self):
        provider = ScriptedProvider([
            _select("papers"),
            SUFFICIENT,
            ("TASK: agent_synthesize", "Protection is strong [1]."),
        ])
        state = ConversationState(session_id="s1")
        response = _agent(provider).run_turn(state, "How effective is the vaccine?")
        assert "[1]" in response.text
        assert len(response.references) == 1
        assert response.references[0].doc_id.startswith("paper-")
        tools = [i.tool for i in response.trace.iterations]
        assert tools[0] == "papers"
        assert tools[-1] == "finish"
        assert response.trace.degraded is False
        assert validate_citations_response(response, STORE) == []

    def test_chitchat_zero_references(self):
        provider = ScriptedProvider([
            _select("chitchat", ""),
            ("TASK: agent_synthesize", "Hello! How can I help?"),
        ])
        state = ConversationState(session_id="s2")
        response = _agent(provider).run_turn(state, "hello")
        assert response.references == []
        assert "[1]" not in response.text
        assert "chitchat" in [i.tool for i in response.trace.iterations]

    def test_empty_user_text_rejected(self):
        provider = ScriptedProvider([])
        state = ConversationState(session_id="s3")
        with pytest.raises(ValueError):
            _agent(provider).run_turn(state, "   ")

    def test_dangling_marker_repaired_and_degraded(self):
        provider = ScriptedProvider([
            _select("papers"),
            SUFFICIENT,
            ("TASK: agent_synthesize", "Strong protection [1] and bogus claim [9]."),
        ])
        state = ConversationState(session_id="s4")
        response = _agent(provider).run_turn(state, "efficacy?")
        assert "[9]" not in response.text
        assert response.trace.degraded is True
        assert validate_citations_response(response, STORE) == []

    def test_iteration_cap_forces_degraded_finish(self):
        def never_finish(req: ChatRequest):
            prompt = req.last_user_text()
            if "agent_select_action" in prompt:
                return json.dumps({"tool": "papers", "query": "more evidence"})
            if "agent_sufficiency" in prompt:
                return json.dumps({"sufficient": False})
            return "Partial answer [1]."

        provider = RuleProvider(never_finish)
        state = ConversationState(session_id="s5")
        agent = _agent(provider)
        response = agent.run_turn(state, "tell me everything")
        assert len(response.trace.iterations) == agent.iteration_cap
        assert response.trace.iterations[-1].tool == "finish"
        assert response.trace.degraded is True

    def test_turn_appended_to_state(self):
        provider = ScriptedProvider([
            _select("chitchat", ""),
            ("TASK: agent_synthesize", "Hi!"),
        ])
        state = ConversationState(session_id="s6")
        _agent(provider).run_turn(state, "hello")
        assert len(state.turns) == 1
        assert state.turns[0].user_text == "hello"


class TestSelectAction:
    def test_unknown_tool_rejected_by_schema(self):
        provider = ScriptedProvider([(None, '{"tool": "sql"}')] * 3)
        with pytest.raises(SchemaError):
            _agent(provider).select_action("(no prior turns)", "q", "")

    def test_finish_passes(self):
        provider = ScriptedProvider([(None, '{"tool": "finish"}')])
        action = _agent(provider).select_action("(no prior turns)", "q", "")
        assert action["tool"] == "finish"

    def test_valid_tool_passthrough(self):
        provider = ScriptedProvider(
            [(None, '{"tool": "news", "query": "HPV 接種 再開"}')]
        )
        action = _agent(provider).select_action("(no prior turns)", "q", "")
        assert action == {"tool": "news", "query": "HPV 接種 再開", "thought": ""}


class TestExecuteTool:
    def test_papers_tool_collection_isolation(self):
        agent = _agent(ScriptedProvider([]))
        result = agent.execute_tool(ToolName.PAPERS, "vaccine efficacy")
        assert result.hits
        assert all(h.payload.collection is CollectionId.PAPERS for h in result.hits)

    def test_chitchat_no_retrieval(self):
        agent = _agent(ScriptedProvider([]))
        result = agent.execute_tool(ToolName.CHITCHAT, "")
        assert result.hits == [] and result.evidence == []

    def test_empty_query_rejected_for_retrieval_tools(self):
        agent = _agent(ScriptedProvider([]))
        with pytest.raises(ValueError):
            agent.execute_tool(ToolName.NEWS, "  ")

    def test_social_snippets_hide_author_refs(self):
        provider = ScriptedProvider([
            ("TASK: agent_social_summary", "Themes: experiences and safety questions."),
        ])
        agent = _agent(provider)
        result = agent.execute_tool(ToolName.SOCIAL, "接種の話題")
        refs = [h.payload.author_ref for h in result.hits if h.payload.author_ref]
        assert refs, "fixture posts should carry pseudonymous author refs"
        rendered = " ".join(e.snippet + e.display for e in result.evidence)
        for ref in refs:
            assert ref not in rendered


class TestAggregateSocial:
    def _hits(self, n):
        docs = STORE.scan(CollectionId.SOCIAL)[:n]
        return [SearchHit(doc_id=d.id, score=1.0, payload=d) for d in docs]

    def test_below_threshold_fixed_snippet(self):
        agent = _agent(ScriptedProvider([]))
        out = agent.aggregate_social(self._hits(2))
        assert "Insufficient" in out

    def test_zero_hits_fixed_snippet(self):
        agent = _agent(ScriptedProvider([]))
        assert "Insufficient" in agent.aggregate_social([])

    def test_scripted_summary_passes_scan(self):
        provider = ScriptedProvider(
            [("TASK: agent_social_summary", "Discussion mixes support and worry.")]
        )
        agent = _agent(provider)
        out = agent.aggregate_social(self._hits(5))
        assert out == "Discussion mixes support and worry."

    def test_author_pseudonym_leak_degrades(self):
        hits = self._hits(5)
        leaked = hits[0].payload.author_ref
        provider = ScriptedProvider(
            [("TASK: agent_social_summary", f"Posted by {leaked} and others.")]
        )
        agent = _agent(provider)
        assert "Insufficient" in agent.aggregate_social(hits)

    def test_long_verbatim_quote_degrades(self):
        hits = self._hits(5)
        long_doc = _doc(
            "post-long", CollectionId.SOCIAL,
            "one two three four five six seven eight nine ten eleven twelve",
        )
        hits.append(SearchHit(doc_id=long_doc.id, score=1.0, payload=long_doc))
        provider = ScriptedProvider([
            ("TASK: agent_social_summary",
             "They said: one two three four five six seven eight nine ten eleven."),
        ])
        agent = _agent(provider)
        assert "Insufficient" in agent.aggregate_social(hits, k_min=3)


class TestCitationValidators:
    def test_tool_level_subset_passes(self):
        assert validate_citations_tool(["h1", "h2", "h3"], ["h1", "h2"]) == []

    def test_tool_level_unknown_id(self):
        assert validate_citations_tool(["h1"], ["h9"]) == ["h9"]

    def test_tool_level_empty_citations(self):
        assert validate_citations_tool(["h1"], []) == []

    def _response(self, text, refs):
        return Response(text=text, references=refs, trace=AgentTrace())

    def test_response_level_pass(self):
        refs = [Reference(1, "paper-a", "A"), Reference(2, "paper-b", "B")]
        assert validate_citations_response(self._response("x [1] y [2]", refs), STORE) == []

    def test_response_level_bijection_violations(self):
        refs = [Reference(1, "paper-a", "A"), Reference(2, "paper-b", "B")]
        violations = validate_citations_response(
            self._response("x [1] y [3]", refs), STORE
        )
        assert len(violations) == 2

    def test_response_level_unknown_doc(self):
        refs = [Reference(1, "ghost-doc", "G")]
        violations = validate_citations_response(self._response("x [1]", refs), STORE)
        assert any("ghost-doc" in v for v in violations)


class TestHistoryWindow:
    def _turn(self, i):
        from vaxrag.agent import Turn

        return Turn(
            user_text=f"question {i}",
            response=Response(text=f"answer {i}", references=[], trace=AgentTrace()),
        )

    def test_window_keeps_most_recent(self):
        state = ConversationState(session_id="h1", window_size=10)
        for i in range(1, 13):
            state.turns.append(self._turn(i))
        rendered = trim_history(state)
        assert "question 1\n" not in rendered.replace("question 12", "")
        assert "question 2\n" not in rendered.replace("question 12", "")
        assert "question 3" in rendered
        assert "question 12" in rendered

    def test_single_turn(self):
        state = ConversationState(session_id="h2")
        state.turns.append(self._turn(1))
        assert "question 1" in trim_history(state)

    def test_followup_sees_previous_topic(self):
        provider = ScriptedProvider([
            _select("papers"),
            SUFFICIENT,
            ("TASK: agent_synthesize", "Efficacy is high [1]."),
            _select("papers", "side effects"),
            SUFFICIENT,
            ("efficacy", "Side effects are mild [1]."),  # context must be present
        ])
        state = ConversationState(session_id="h3")
        agent = _agent(provider)
        agent.run_turn(state, "Tell me about efficacy")
        response = agent.run_turn(state, "What about side effects?")
        assert response.text.startswith("Side effects")


class TestConsentGate:
    def test_no_consent_no_persistence(self):
        store = _mini_store()
        replies = []
        for _ in range(5):
            replies += [_select("chitchat", ""), ("TASK: agent_synthesize", "Hi!")]
        agent = _agent(ScriptedProvider(replies), store=store)
        state = ConversationState(session_id="c1", consent=False)
        before = store.count(CollectionId.CHAT)
        for _ in range(5):
            agent.run_turn(state, "hello")
        assert store.count(CollectionId.CHAT) == before

    def test_consented_turns_persisted(self):
        store = _mini_store()
        agent = _agent(
            ScriptedProvider([
                _select("papers"),
                SUFFICIENT,
                ("TASK: agent_synthesize", "Answer [1]."),
            ]),
            store=store,
        )
        state = ConversationState(session_id="c2", consent=True)
        before = store.count(CollectionId.CHAT)
        agent.run_turn(state, "how effective?")
        assert store.count(CollectionId.CHAT) == before + 1
        stored = store.scan(CollectionId.CHAT)[-1]
        assert "how effective?" in stored.text
        assert stored.metadata["session_id"] == "c2"


@settings(max_examples=30, deadline=None)
@given(st.text(alphabet="claim [] 0123456789.", min_size=1, max_size=80))
def test_any_draft_yields_valid_response(draft):
    provider = ScriptedProvider([
        _select("papers"),
        SUFFICIENT,
        (None, draft or "x"),
    ])
    state = ConversationState(session_id="fz")
    response = _agent(provider).run_turn(state, "question")
    assert validate_citations_response(response, STORE) == []
    markers = {r.n for r in response.references}
    assert markers == set(range(1, len(response.references) + 1))
