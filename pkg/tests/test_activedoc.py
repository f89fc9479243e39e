import pytest

from scram.activedoc import DocTypeRegistry, DocumentEngine, ObjectStore
from scram.errors import DocTypeError, MarkupError, ScramError
from scram.markup import EventKind
from scram.urlaccess import UrlCache, default_registry


def write(tmp_path, name, text):
    path = tmp_path / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return f"file:{path}"


def names_builder(events):
    # toy payload: the open-tag names in order
    return [e.name for e in events if e.kind is EventKind.OPEN]


@pytest.fixture
def engine(tmp_path):
    types = DocTypeRegistry()
    types.register("Test::Names", "1.0", names_builder)
    cache = UrlCache(str(tmp_path / "_cache"), default_registry())
    return DocumentEngine(cache, types, ObjectStore())


class TestRegistry:
    def test_duplicate_type_rejected(self):
        types = DocTypeRegistry()
        types.register("A::B", "1.0", names_builder)
        with pytest.raises(DocTypeError, match="already registered"):
            types.register("A::B", "2.0", names_builder)

    def test_colon_variants_are_one_type(self):
        types = DocTypeRegistry()
        types.register("A::B", "1.0", names_builder)
        with pytest.raises(DocTypeError):
            types.register("A:B", "1.0", names_builder)

    @pytest.mark.parametrize("doc_version, ok", [
        ("1.0", False), ("2.0", True), ("2.1", True), ("10.0", True),
    ])
    def test_min_version_gate(self, tmp_path, doc_version, ok):
        types = DocTypeRegistry()
        types.register("T::V", "2.0", names_builder)
        cache = UrlCache(str(tmp_path / "c"), default_registry())
        engine = DocumentEngine(cache, types)
        url = write(tmp_path, f"v{doc_version}.doc",
                    f"<doc type=T::V version={doc_version}><x>")
        if ok:
            assert engine.activate(url).payload == ["x"]
        else:
            with pytest.raises(DocTypeError, match="older than"):
                engine.activate(url)

    def test_unknown_type_names_the_type(self, engine, tmp_path):
        url = write(tmp_path, "u.doc", "<doc type=No::Such version=1.0>")
        with pytest.raises(DocTypeError, match="No::Such"):
            engine.activate(url)


class TestActivate:
    def test_pipeline_produces_payload(self, engine, tmp_path):
        url = write(tmp_path, "a.doc", "<doc type=Test::Names version=1.0><p><q>")
        doc = engine.activate(url)
        assert doc.payload == ["p", "q"]
        assert doc.header.doc_type == "Test::Names"

    def test_memoization_skips_fetch_and_parse(self, engine, tmp_path):
        url = write(tmp_path, "a.doc", "<doc type=Test::Names version=1.0><p>")
        first = engine.activate(url)
        fetches, parses = engine.stats.fetches, engine.stats.parses
        adapter_calls = engine.cache.stats.adapter_calls
        second = engine.activate(url)
        assert second is first
        assert engine.stats.fetches == fetches
        assert engine.stats.parses == parses
        assert engine.cache.stats.adapter_calls == adapter_calls

    def test_include_equals_hand_concatenation(self, engine, tmp_path):
        frag_url = write(tmp_path, "b.doc", "<doc type=Test::Names version=1.0><m><n>")
        a_url = write(tmp_path, "a.doc",
                      f'<doc type=Test::Names version=1.0><p><include url="{frag_url}"><q>')
        combined = write(tmp_path, "ab.doc",
                         "<doc type=Test::Names version=1.0><p><m><n><q>")
        assert engine.activate(a_url).payload == engine.activate(combined).payload

    def test_include_requires_typed_document(self, engine, tmp_path):
        frag_url = write(tmp_path, "naked.doc", "<m>")
        a_url = write(tmp_path, "a.doc",
                      f'<doc type=Test::Names version=1.0><include url="{frag_url}">')
        with pytest.raises((DocTypeError, MarkupError)):
            engine.activate(a_url)

    def test_include_type_must_match(self, tmp_path):
        types = DocTypeRegistry()
        types.register("T::One", "1.0", names_builder)
        types.register("T::Two", "1.0", names_builder)
        engine = DocumentEngine(UrlCache(str(tmp_path / "c"), default_registry()), types)
        other = write(tmp_path, "two.doc", "<doc type=T::Two version=1.0><x>")
        outer = write(tmp_path, "one.doc",
                      f'<doc type=T::One version=1.0><include url="{other}">')
        with pytest.raises(DocTypeError, match="expects type"):
            engine.activate(outer)

    def test_inline_resolves_relative_to_including_document(self, engine, tmp_path):
        write(tmp_path, "sub/inner.doc", "<leaf>")
        # relative url: resolved against the including document's directory
        outer = write(tmp_path, "sub/outer.doc",
                      '<doc type=Test::Names version=1.0><inline url="inner.doc">')
        assert engine.activate(outer).payload == ["leaf"]

    def test_cycle_reported_with_urls(self, engine, tmp_path):
        a_path = tmp_path / "a.doc"
        b_path = tmp_path / "b.doc"
        a_path.write_text(
            f'<doc type=Test::Names version=1.0><inline url="file:{b_path}">')
        b_path.write_text(
            f'<doc type=Test::Names version=1.0><inline url="file:{a_path}">')
        with pytest.raises((DocTypeError, MarkupError), match="cycle"):
            engine.activate(f"file:{a_path}")

    def test_failure_names_outermost_url_in_context(self, engine, tmp_path):
        inner = write(tmp_path, "inner.doc", "<doc type=Test::Names version=1.0><oops")
        outer_url = write(tmp_path, "outer.doc",
                          f'<doc type=Test::Names version=1.0><inline url="{inner}">')
        with pytest.raises(ScramError) as exc:
            engine.activate(outer_url)
        assert "outer.doc" in exc.value.context
        assert "inner.doc" in str(exc.value) or "inner.doc" in exc.value.context

    def test_version_is_part_of_store_key(self, tmp_path):
        calls = []

        def adapter(url, version):
            calls.append(version)
            return b"<doc type=Test::Names version=1.0><x>"

        from scram.urlaccess import SchemeRegistry
        types = DocTypeRegistry().register("Test::Names", "1.0", names_builder)
        cache = UrlCache(str(tmp_path / "c"), SchemeRegistry().register("stub", adapter))
        engine = DocumentEngine(cache, types)
        engine.activate("stub:one", "1.0")
        engine.activate("stub:one", "2.0")
        engine.activate("stub:one", "1.0")
        assert calls == ["1.0", "2.0"]
