import pytest
from hypothesis import given, strategies as st

from scram.errors import MarkupError
from scram.markup import (
    EventKind,
    HandlerMap,
    TagEvent,
    chardata_event,
    close_event,
    open_event,
    parse_version,
    parse_with_handlers,
    read_doc_header,
    serialize_events,
    splice_inline,
    tokenize_markup,
)


def opens(events, name=None):
    return [
        e for e in events
        if e.kind is EventKind.OPEN and (name is None or e.folded_name == name)
    ]


class TestTokenize:
    def test_single_open_tag(self):
        events = tokenize_markup("<select name=CC>")
        assert events == [open_event("select", [("name", "CC")])]

    def test_empty_input(self):
        assert tokenize_markup("") == []

    def test_hand_traced_table(self):
        # frozen against a hand-traced tokenizer table
        events = tokenize_markup('<a x="p q">t</a>')
        assert events == [
            open_event("a", [("x", "p q")]),
            chardata_event("t"),
            close_event("a"),
        ]

    def test_boost_fixture_has_three_tool_opens(self, boost_text):
        events = tokenize_markup(boost_text, "boost.tooldoc")
        tools = opens(events, "tool")
        assert [e.get("version") for e in tools] == ["1.28.0", "1.29.0", "1.30.0"]
        assert all(e.get("name") == "Boost" for e in tools)

    def test_unquoted_value_ends_at_whitespace_or_gt(self):
        events = tokenize_markup("<e name=LD_LIBRARY_PATH value=$LIBDIR \n  type=Runtime_path>")
        (ev,) = events
        assert ev.attrs == (
            ("name", "LD_LIBRARY_PATH"),
            ("value", "$LIBDIR"),
            ("type", "Runtime_path"),
        )

    def test_quoted_value_may_contain_newline_equals_amp(self):
        text = '<base url="cvs://host/root\n  ?auth=x&user=y">'
        (ev,) = tokenize_markup(text)
        assert ev.get("url") == "cvs://host/root\n  ?auth=x&user=y"

    def test_unclosed_tags_are_legal(self):
        events = tokenize_markup("<Lib name=a><Lib name=b>")
        assert len(opens(events, "lib")) == 2

    def test_stray_lt_is_chardata(self):
        events = tokenize_markup("a < b <! c <3")
        assert events == [chardata_event("a < b <! c <3")]

    def test_chardata_runs_are_maximal(self):
        events = tokenize_markup("x<t>  mid  </t>y")
        kinds = [e.kind for e in events]
        assert kinds == [
            EventKind.CHARDATA, EventKind.OPEN, EventKind.CHARDATA,
            EventKind.CLOSE, EventKind.CHARDATA,
        ]
        assert events[2].text == "  mid  "

    def test_unterminated_tag_errors_with_location(self):
        with pytest.raises(MarkupError) as exc:
            tokenize_markup("ok\n<Tool name=x", "f.doc")
        assert exc.value.location.line == 2
        assert exc.value.location.source == "f.doc"

    def test_unterminated_quote_errors(self):
        with pytest.raises(MarkupError, match="unterminated quoted"):
            tokenize_markup('<a x="never closed')

    def test_duplicate_attribute_rejected_case_insensitively(self):
        with pytest.raises(MarkupError, match="duplicate attribute"):
            tokenize_markup("<a name=x NAME=y>")

    def test_xml_style_self_close_tolerated(self):
        assert tokenize_markup('<a x="1"/>') == [open_event("a", [("x", "1")])]

    def test_slash_in_unquoted_value_is_value_text(self):
        # unquoted values end at whitespace or '>', nothing else
        assert tokenize_markup("<a x=1/>") == [open_event("a", [("x", "1/")])]

    def test_value_free_attribute(self):
        (ev,) = tokenize_markup("<a checked>")
        assert ev.attrs == (("checked", ""),)

    def test_locations_track_lines_and_columns(self):
        events = tokenize_markup("ab\n<t>", "s")
        assert events[0].location.line == 1 and events[0].location.column == 1
        assert events[1].location.line == 2 and events[1].location.column == 1

    @given(st.text(alphabet=st.characters(blacklist_characters="<")))
    def test_total_on_tag_free_text(self, text):
        events = tokenize_markup(text)
        assert "".join(e.text for e in events) == text
        assert all(e.kind is EventKind.CHARDATA for e in events)

    @given(st.text())
    def test_chardata_concatenation_never_loses_tag_free_input(self, text):
        # arbitrary text either tokenizes or raises a located MarkupError
        try:
            events = tokenize_markup(text)
        except MarkupError as exc:
            assert exc.location is not None
            return
        rebuilt = serialize_events(events)
        assert tokenize_markup(rebuilt) == events


class TestRoundTrip:
    @pytest.mark.parametrize("text", [
        "<select name=CC>",
        '<a x="p q">t</a>',
        "plain text, no tags < 3",
        '<base url="two\nlines">tail',
        "<A b=1><a B=2></A>",
    ])
    def test_parse_serialize_parse(self, text):
        events = tokenize_markup(text)
        assert tokenize_markup(serialize_events(events)) == events

    def test_boost_fixture_round_trips(self, boost_text):
        events = tokenize_markup(boost_text)
        assert tokenize_markup(serialize_events(events)) == events

    def test_unserializable_attr_value(self):
        ev = open_event("a", [("x", 'has "quote" and space')])
        with pytest.raises(MarkupError, match="double quote"):
            serialize_events([ev])


class TestDocHeader:
    def test_requirements_header(self):
        header = read_doc_header(
            tokenize_markup("<doc type=BuildSystem::Requirements version=2.0>")
        )
        assert header.doc_type == "BuildSystem::Requirements"
        assert header.doc_version == "2.0"

    def test_single_colon_type_path(self):
        header = read_doc_header(tokenize_markup("<doc type=a:b version=2.1>"))
        assert header.doc_type == "a:b"
        assert header.doc_version == "2.1"
        assert header.type_path() == ("a", "b")
        assert header.type_path() == read_doc_header(
            tokenize_markup("<doc type=a::b version=2.1>")
        ).type_path()

    def test_leading_whitespace_allowed(self):
        header = read_doc_header(tokenize_markup("\n  \n<doc type=t version=1>"))
        assert header.doc_type == "t"

    def test_missing_doc_tag(self):
        with pytest.raises(MarkupError, match="expected <doc>"):
            read_doc_header(tokenize_markup("<Tool name=X>"))

    def test_empty_stream(self):
        with pytest.raises(MarkupError, match="no <doc> header"):
            read_doc_header([])

    def test_text_before_header(self):
        with pytest.raises(MarkupError, match="text before"):
            read_doc_header(tokenize_markup("hello<doc type=t version=1>"))

    @pytest.mark.parametrize("tag", [
        "<doc version=1>", "<doc type=t>", "<doc type=t version=x.y>",
    ])
    def test_incomplete_header(self, tag):
        with pytest.raises(MarkupError):
            read_doc_header(tokenize_markup(tag))


class TestVersionCompare:
    # dotted-numeric ordering oracle: componentwise integers
    CASES = ["1.0", "2.0", "2.1", "10.0"]

    def test_enumerated_ordering(self):
        def oracle(v):
            return [int(p) for p in v.split(".")]

        for a in self.CASES:
            for b in self.CASES:
                assert (parse_version(a) < parse_version(b)) == (oracle(a) < oracle(b))

    def test_lexicographic_trap(self):
        assert parse_version("10.0") > parse_version("2.0")
        assert parse_version("2.1") > parse_version("2.0")


class TestHandlerDispatch:
    def make_counting_map(self, record):
        hm = HandlerMap()
        hm.add("tools", "Tool",
               open=lambda s, e: record.append(("open", e.get("version"))),
               close=lambda s, e: record.append(("close", None)))
        return hm

    def test_dispatch_order_equals_textual_order(self, boost_text):
        record = []
        hm = self.make_counting_map(record)
        parse_with_handlers(tokenize_markup(boost_text), hm, None)
        assert record == [
            ("open", "1.28.0"), ("close", None),
            ("open", "1.29.0"), ("close", None),
            ("open", "1.30.0"), ("close", None),
        ]

    def test_empty_map_is_noop(self, boost_text):
        state = {"untouched": True}
        out = parse_with_handlers(tokenize_markup(boost_text), HandlerMap(), state)
        assert out is state and state == {"untouched": True}

    def test_case_insensitive_tag_match(self):
        hits = []
        hm = HandlerMap()
        hm.add("g", "tool", open=lambda s, e: hits.append(e.name))
        parse_with_handlers(tokenize_markup("<TOOL a=1><Tool a=2>"), hm, None)
        assert hits == ["TOOL", "Tool"]  # original case preserved on the event

    def test_group_toggling_marks_client_scope(self, boost_text):
        # hand-traced expectation over the Boost stream: the three variables
        # inside <Client> are flagged, LD_LIBRARY_PATH outside is not
        flags = []

        hm = HandlerMap()
        hm.add("outside", "Environment",
               open=lambda s, e: flags.append((e.get("name"), False)))
        hm.add("inside", "Environment",
               open=lambda s, e: flags.append((e.get("name"), True)),
               activate=False)

        def enter(state, ev):
            hm.deactivate("outside")
            hm.activate("inside")

        def leave(state, ev):
            hm.deactivate("inside")
            hm.activate("outside")

        hm.add("scope", "Client", open=enter, close=leave)
        parse_with_handlers(tokenize_markup(boost_text), hm, None)
        assert flags[:4] == [
            ("BOOST_BASE", True), ("LIBDIR", True), ("INCLUDE", True),
            ("LD_LIBRARY_PATH", False),
        ]
        assert flags == flags[:4] * 3

    def test_chardata_routed_to_innermost_open_tag(self):
        text = "<Tool name=T><Environment name=V>  described here  </Environment>tail</Tool>"
        got = {}
        hm = HandlerMap()
        hm.add("g", "Environment", chardata=lambda s, e: got.setdefault("env", e.text))
        hm.add("g", "Tool", chardata=lambda s, e: got.setdefault("tool", e.text))
        parse_with_handlers(tokenize_markup(text), hm, None)
        assert got["env"] == "  described here  "
        assert got["tool"] == "tail"

    def test_handler_isolation(self, boost_text):
        # a deactivated group behaves exactly as if never registered
        def collect(with_noise, noise_active):
            hm = HandlerMap()
            state = []
            hm.add("real", "Lib", open=lambda s, e: s.append(e.get("name")))
            if with_noise:
                hm.add("noise", "Lib", open=lambda s, e: s.append("NOISE"),
                       activate=noise_active)
                if not noise_active:
                    pass
                else:
                    hm.deactivate("noise")
            return parse_with_handlers(tokenize_markup(boost_text), hm, state)

        assert collect(False, False) == collect(True, False) == collect(True, True)

    def test_duplicate_registration_in_group_rejected(self):
        hm = HandlerMap()
        hm.add("g", "x", open=lambda s, e: None)
        with pytest.raises(MarkupError, match="already handles"):
            hm.add("g", "X", open=lambda s, e: None)

    def test_two_active_groups_claiming_tag_is_error(self):
        hm = HandlerMap()
        hm.add("g1", "x", open=lambda s, e: None)
        hm.add("g2", "x", open=lambda s, e: None)
        with pytest.raises(MarkupError, match="several active groups"):
            parse_with_handlers(tokenize_markup("<x>"), hm, None)

    def test_handler_error_gets_event_location(self):
        hm = HandlerMap()

        def boom(state, ev):
            raise ValueError("bad value")

        hm.add("g", "x", open=boom)
        with pytest.raises(MarkupError) as exc:
            parse_with_handlers(tokenize_markup("\n\n<x>", "doc"), hm, None)
        assert exc.value.location.line == 3


class TestSpliceInline:
    def test_single_splice(self):
        streams = {"file:U": tokenize_markup("<x>")}
        events = tokenize_markup('<a><inline url="file:U"><b>')
        out = splice_inline(events, streams.__getitem__)
        assert out == [open_event("a"), open_event("x"), open_event("b")]

    def test_inlined_doc_header_is_dropped(self):
        streams = {"U": tokenize_markup("<doc type=t version=1><x>")}
        out = splice_inline(tokenize_markup('<inline url=U>'), streams.__getitem__)
        assert out == [open_event("x")]

    def test_self_inclusion_cycle(self):
        streams = {"me": tokenize_markup('<inline url=me>')}
        with pytest.raises(MarkupError, match="me -> me"):
            splice_inline(streams["me"], streams.__getitem__)

    def test_two_level_nesting_matches_hand_concatenation(self):
        a = '<p><inline url=B><q>'
        b = '<r><inline url=C>'
        c = '<s t=1>'
        streams = {"B": tokenize_markup(b), "C": tokenize_markup(c)}
        out = splice_inline(tokenize_markup(a), streams.__getitem__)
        # hand-computed flattening: p, r, s, q
        assert out == tokenize_markup("<p><r><s t=1><q>")

    def test_resolver_failure_names_url(self):
        def resolver(url):
            raise IOError("no such document")

        with pytest.raises(MarkupError, match="file:gone"):
            splice_inline(tokenize_markup('<inline url=file:gone>'), resolver)

    def test_non_inline_order_preserved(self):
        streams = {"U": tokenize_markup("<m>")}
        text = 'head<one><inline url=U>mid<two>tail'
        out = splice_inline(tokenize_markup(text), streams.__getitem__)
        non_inline = tokenize_markup(text.replace('<inline url=U>', '<m>'))
        assert out == non_inline


def test_close_event_invariants():
    with pytest.raises(ValueError):
        TagEvent(EventKind.CLOSE, name="x", attrs=(("a", "1"),))
    with pytest.raises(ValueError):
        TagEvent(EventKind.CHARDATA, name="x", text="t")
