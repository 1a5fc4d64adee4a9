from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given
from hypothesis import strategies as st

from navmine.log_ingest import (
    FilterConfig,
    MalformedLine,
    ParseStats,
    RawHit,
    filter_hits,
    format_clf,
    iter_hits,
    parse_line,
    path_extension,
)

LINE = '10.0.0.1 - - [10/Jul/2005:12:00:00 +0000] "GET /index.html HTTP/1.0" 200 512'
UTC = timezone.utc


def raw(path="/index.html", status=200, method="GET", client="10.0.0.1", agent=None, second=0):
    return RawHit(client, None, None, datetime(2005, 7, 10, 12, 0, second, tzinfo=UTC),
                  method, path, "HTTP/1.0", status, 10, None, agent)


class TestParseLine:
    def test_common_format(self):
        hit = parse_line(LINE, "common")
        assert hit.client_addr == "10.0.0.1"
        assert hit.timestamp == datetime(2005, 7, 10, 12, 0, 0, tzinfo=UTC)
        assert hit.method == "GET"
        assert hit.path == "/index.html"
        assert hit.protocol == "HTTP/1.0"
        assert hit.status == 200
        assert hit.bytes == 512
        assert hit.ident is None and hit.authuser is None
        assert hit.referer is None and hit.user_agent is None

    def test_combined_format(self):
        hit = parse_line(LINE + ' "http://ref/" "AgentX"', "combined")
        assert hit.referer == "http://ref/"
        assert hit.user_agent == "AgentX"
        assert hit.path == "/index.html" and hit.bytes == 512

    def test_combined_dash_fields_are_absent(self):
        hit = parse_line(LINE + ' "-" "-"', "combined")
        assert hit.referer is None and hit.user_agent is None

    def test_empty_line(self):
        with pytest.raises(MalformedLine):
            parse_line("", "common")

    @pytest.mark.parametrize("line", [
        "garbage",
        LINE.replace("[10/Jul", "[10/Jux"),
        LINE.replace(" 200 ", " 700 "),
        LINE.replace("512", "-12"),
        LINE.replace("10/Jul/2005", "31/Feb/2005"),
        LINE + ' "http://ref/" "AgentX"',   # combined line under the common grammar
        LINE.replace('"GET /index.html HTTP/1.0"', '"-"'),
    ])
    def test_malformed(self, line):
        with pytest.raises(MalformedLine):
            parse_line(line, "common")

    def test_common_line_is_not_combined(self):
        with pytest.raises(MalformedLine):
            parse_line(LINE, "combined")

    def test_zone_offset_and_identity_fields(self):
        hit = parse_line('h jdoe frank [10/Oct/2000:13:55:36 -0700] "GET /a.gif HTTP/1.0" 304 -')
        assert hit.ident == "jdoe" and hit.authuser == "frank"
        assert hit.bytes is None
        assert hit.timestamp == datetime(2000, 10, 10, 20, 55, 36, tzinfo=UTC)
        assert hit.timestamp.utcoffset() == timedelta(hours=-7)

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            parse_line(LINE, "w3c")

    def test_round_trip_with_formatter(self):
        when = datetime(2006, 1, 2, 3, 4, 5, tzinfo=UTC)
        hit = parse_line(format_clf("1.2.3.4", when, "/x.html", 200, 7))
        assert (hit.client_addr, hit.timestamp, hit.path, hit.status, hit.bytes) == (
            "1.2.3.4", when, "/x.html", 200, 7)

    @given(st.text(max_size=120))
    def test_total(self, line):
        # either a complete record or MalformedLine, nothing else
        try:
            hit = parse_line(line, "common")
        except MalformedLine:
            return
        assert isinstance(hit, RawHit)
        assert 100 <= hit.status <= 599
        assert hit.bytes is None or hit.bytes >= 0


class TestFilter:
    def test_image_excluded(self):
        assert filter_hits([raw("/logo.gif")]) == []

    def test_page_included(self):
        (hit,) = filter_hits([raw("/index.html")])
        assert hit.page == "/index.html"
        assert hit.client_key == "10.0.0.1"
        assert hit.timestamp == datetime(2005, 7, 10, 12, tzinfo=UTC).timestamp()

    def test_status_policy_and_query_stripping(self):
        assert filter_hits([raw("/services?id=7", status=302)]) == []
        (hit,) = filter_hits([raw("/services?id=7", status=200)])
        assert hit.page == "/services"

    def test_keep_query_when_asked(self):
        (hit,) = filter_hits([raw("/s?id=7#top")], FilterConfig(strip_query=False))
        assert hit.page == "/s?id=7"

    def test_fragment_always_stripped(self):
        (hit,) = filter_hits([raw("/a.html#sec")])
        assert hit.page == "/a.html"

    @pytest.mark.parametrize("path,kept", [
        ("/a.JPG", False), ("/style.css", False), ("/app.js?v=2", False), ("/favicon.ico", False),
        ("/a.htm", True), ("/docs/", True), ("/v1.2/page", True), ("/report.pdf", True),
    ])
    def test_extensions(self, path, kept):
        assert bool(filter_hits([raw(path)])) is kept

    def test_304_counts_as_view_and_post_does_not(self):
        assert len(filter_hits([raw(status=304)])) == 1
        assert filter_hits([raw(method="POST")]) == []

    def test_user_agent_key(self):
        (hit,) = filter_hits([raw(agent="AgentX")], FilterConfig(key_user_agent=True))
        assert hit.client_key == "10.0.0.1|AgentX"

    def test_default_ignored_extensions_nonempty(self):
        assert FilterConfig().ignored_extensions

    def test_path_extension(self):
        assert path_extension("/a/b.tar.GZ?x=1.png") == "gz"
        assert path_extension("/dir.v2/file") == ""

    paths = st.sampled_from(["/", "/a.html", "/b.gif", "/c.css", "/d?x=1", "/e.js", "/f"])
    hits = st.lists(st.builds(
        raw, path=paths, status=st.sampled_from([200, 206, 302, 304, 404, 500]),
        method=st.sampled_from(["GET", "POST", "HEAD"]), second=st.integers(0, 59),
    ), max_size=30)

    @given(hits)
    def test_idempotent_and_order_preserving(self, hits):
        cfg = FilterConfig()
        survivors = [h for h in hits if filter_hits([h], cfg)]
        once = filter_hits(hits, cfg)
        assert filter_hits(survivors, cfg) == once
        # surviving hits appear in source order
        assert [h.timestamp.timestamp() for h in survivors] == [h.timestamp for h in once]


def test_iter_hits_counts_malformed():
    lines = [LINE, "", "junk", LINE.replace("/index.html", "/x.png"), LINE + "\n"]
    stats = ParseStats()
    hits = list(iter_hits(lines, "common", FilterConfig(), stats, "t.log"))
    assert len(hits) == 2
    assert (stats.lines, stats.malformed, stats.rejected, stats.kept) == (5, 2, 1, 2)
    assert [s[1] for s in stats.samples] == [2, 3]
