"""Builders for archive-wrapped pages and pathological mementos.

Each wrap_* function takes a well-formed page (doctype, <title>, <body>) and
returns the page as the named archive would serve it: banner markup added,
and for the UK/PRONI archives the "[ARCHIVED CONTENT] " marker spliced into
the title, for Archive.is the whole document minified onto one line.  The
committed fixture corpus is generated from these builders and a test keeps
the two in sync.
"""
from __future__ import annotations

import re

from ..acquisition import JS_REDIRECT_MARKER

ARCHIVED_CONTENT_PREFIX = "[ARCHIVED CONTENT] "

_TITLE_RE = re.compile(r"<title>(.*?)</title>", re.S | re.I)
_BODY_OPEN_RE = re.compile(r"<body[^>]*>", re.I)
_HEAD_CLOSE_RE = re.compile(r"</head>", re.I)

WAYBACK_TOOLBAR = """<div id="wm-ipp" lang="en" style="display:none;">
<div style="position:fixed;left:0;top:0;width:100%">
<div id="wm-ipp-inside">
<table style="width:100%"><tbody><tr>
<td id="wm-logo">
<a href="/web/" title="Wayback Machine home page"><img src="/static/images/toolbar/wayback-toolbar-logo.png" alt="Wayback Machine" width="110" height="39" border="0" /></a>
</td>
<td class="c">
<form target="_top" method="get" action="/web/form-submit.jsp" name="wmtb" id="wmtb"><input type="text" name="url" id="wmtbURL" value="{original_uri}" style="width:400px;" onfocus="this.focus();this.select();" /><input type="hidden" name="type" value="replay" /><input type="hidden" name="date" value="{timestamp}" /><input type="submit" value="Go" /></form>
</td>
<td class="n" rowspan="2">
<table><tbody>
<tr class="m">
<td class="b" nowrap="nowrap">DEC</td>
<td class="c" id="displayMonthEl" title="You are here: {timestamp}">NOV</td>
<td class="f" nowrap="nowrap">JAN</td>
</tr>
</tbody></table>
</td>
</tr></tbody></table>
<div style="text-align:center">
<a href="#close" id="wm-tb-close">Close</a>
<a href="/web/{timestamp}*/{original_uri}">See all captures of this page</a>
</div>
</div>
</div>
</div>"""

UK_INFOBOX = """<div id="webArchiveInfobox" style="display: block; min-width: 130px;">
<script type="text/javascript">
BANNER_TNA_VERSION="13/5/2014";
function enforceBanner() {
  thebody = document.getElementsByTagName("body")[0];
  if (thebody != null && thebody.style != null) {
    thebody.style.backgroundPosition = "0px 73px";
    thebody.style.position = "relative";
    thebody.style.marginTop = "105px";
  }
}
enforceBanner();
</script>
<div id="webArchiveLogo" style="display: block; width: 317px; height: 70px; float: left; background: url(/media/img/TNA_logo_white_201006.gif) no-repeat 2px 20px;">&nbsp;</div>
<div style="display: block; margin-top: 18px; color: white; text-align: left;">
This snapshot, taken on 05/04/2012, shows web content acquired for preservation by The National Archives.
External links, forms and search may not work for archived websites.
</div>
</div>"""

PRONI_BANNER = """<div id="PRONIBANNER" style="display: block; position: absolute; width: 100%;">
<div id="PRONILOGO" style="display: block; width: 400px; height: 96px; float: right; background-image: url('/media/img/pronilogo.jpg');"><span class="ACCESSIBLE" style="visibility: hidden;">Public Record Office of Northern Ireland</span>
</div>
<div id="PRONIBANNERCONTENT" style="display: block; height: 100%;">
<div style="display: block; padding: 15px 0 2px 0; color: #18417f !important; font-weight: bold !important;">THIS IS NOT A LIVE WEBSITE
</div>
<div style="display: block;">This is a snapshot taken by the Public Record Office of Northern Ireland web archive.</div>
</div>
</div>"""

ARCHIVE_IS_HEADER = """<div id="HEADER" style="font-family:Verdana,Arial,Helvetica;background-color:#FFFAE1;border-bottom:2px #B40010 solid;min-width:1028px"><div style="padding-top:10px"></div><table style="width:1028px;font-size:10px" border="0" cellspacing="0" cellpadding="0"><tr><td style="width:150px;text-align:center;vertical-align:top" rowspan="5"><span style="white-space:nowrap;color:black;margin:0px;cursor:pointer" onclick="window.location='http://archive.is/'"><div style="font-size:24px">archive.is</div><div style="font-size:12px">webpage capture</div></span></td><td style="text-align:right;white-space:nowrap;vertical-align:top;font-size:14px;font-weight:bold">Saved from</td><td style="text-align:right;white-space:nowrap;vertical-align:top">{original_uri}</td></tr></table></div>"""

ARCHIVE_IS_HASHTAGS = """<table id="hashtags" style="text-align:right;font-family:Verdana,Arial,Helvetica;font-size:10px" border="0"><tr><td><a href="#section-1">#top</a></td></tr><tr><td><a href="#section-2">#content</a></td></tr></table>"""

ARCHIVE_IS_META = '<meta property="og:site_name" content="archive.is">'

WEBCITE_FRAMESET = """<!DOCTYPE html PUBLIC "-//W3C//DTD XHTML 1.0 Frameset//EN" "http://www.w3.org/TR/xhtml1/DTD/xhtml1-frameset.dtd">
<html xmlns="http://www.w3.org/1999/xhtml" xml:lang="en" lang="en">
  <head>
    <meta http-equiv="Content-Type" content="text/html; charset=utf-8"/>
    <title>WebCite query result</title>
    <link rel="stylesheet" type="text/css" href="/basic.css" />
    <link rel="stylesheet" type="text/css" href="/nicetitle.css" />
    <script src="https://www.google.com/recaptcha/api.js" async defer></script>
  </head>
  <frameset rows="60,*" frameborder="0">
    <frame src="./topframe.php" name="nav" noresize="noresize" marginwidth="0" marginheight="0" scrolling="no" />
    <frame src="./mainframe.php" name="main" noresize="noresize" marginwidth="0" marginheight="0" />
  </frameset>
</html>
"""


def _title_of(html: str) -> str:
    match = _TITLE_RE.search(html)
    if not match:
        raise ValueError("page has no <title> to wrap")
    return match.group(1)


def _insert_after_body_open(html: str, insert: str) -> str:
    match = _BODY_OPEN_RE.search(html)
    if not match:
        raise ValueError("page has no <body> to wrap")
    return html[: match.end()] + "\n" + insert + html[match.end():]


def _insert_before_head_close(html: str, insert: str) -> str:
    match = _HEAD_CLOSE_RE.search(html)
    if not match:
        raise ValueError("page has no </head>")
    return html[: match.start()] + insert + "\n" + html[match.start():]


def _rewrite_prelude_with_prefix(html: str) -> str:
    """Compact the markup up to the title and splice in the archived marker.

    The marker must be the very first extracted text for the downstream
    19-character prefix strip to fire, so no whitespace text may precede the
    title text.
    """
    match = _TITLE_RE.search(html)
    if not match:
        raise ValueError("page has no <title> to wrap")
    rest = html[match.end():]
    return (
        "<!DOCTYPE html><html><head><title>"
        + ARCHIVED_CONTENT_PREFIX
        + match.group(1)
        + "</title>"
        + rest
    )


def wrap_plain(html: str) -> str:
    """Identity: the page as a non-rewriting host would serve it."""
    return html


def wrap_wayback(
    html: str,
    original_uri: str = "http://example.com/",
    timestamp: str = "20081126132802",
) -> str:
    banner = WAYBACK_TOOLBAR.format(original_uri=original_uri, timestamp=timestamp)
    out = _insert_before_head_close(
        html,
        f'<script type="text/javascript" src="/static/js/wm-toolbar.js"></script>\n'
        f'<link rel="stylesheet" type="text/css" href="/static/css/toolbar.css"/>',
    )
    return _insert_after_body_open(out, banner)


def wrap_uk_national_archives(html: str) -> str:
    return _insert_after_body_open(_rewrite_prelude_with_prefix(html), UK_INFOBOX)


def wrap_proni(html: str) -> str:
    return _insert_after_body_open(_rewrite_prelude_with_prefix(html), PRONI_BANNER)


def minify_html(html: str) -> str:
    """Collapse every whitespace run to a single space, one line total."""
    return re.sub(r"\s+", " ", html).strip()


def wrap_archive_is(html: str, original_uri: str = "http://example.com/") -> str:
    out = _insert_before_head_close(html, ARCHIVE_IS_META)
    out = _insert_after_body_open(
        out, ARCHIVE_IS_HEADER.format(original_uri=original_uri) + "\n" + ARCHIVE_IS_HASHTAGS
    )
    return minify_html(out)


def wayback_js_redirect_page(target: str, status: int = 302) -> str:
    """A Wayback-style page that simulates an HTTP redirect in JavaScript.

    Contains the marker string that the default js-redirect pattern matches,
    with the target in the impatient-reader link.
    """
    marker = JS_REDIRECT_MARKER.replace("302", str(status))
    return f"""<!DOCTYPE html>
<html>
<head>
<title>Wayback Machine</title>
</head>
<body>
<div id="positionHome">
<h2>{marker}</h2>
<p class="code">Redirecting to...</p>
<p class="code">{target}</p>
<p class="impatient"><a href="{target}">Impatient?</a></p>
<script type="text/javascript">
function instaRedirect() {{ document.location.href = "{target}"; }}
window.setTimeout(instaRedirect, 5000);
</script>
</body>
</html>
"""


def meta_refresh_page(content_value: str, body_text: str = "You are being redirected.") -> str:
    return f"""<!DOCTYPE html>
<html>
<head>
<title>Moved</title>
<meta http-equiv="refresh" content="{content_value}">
</head>
<body>
<p>{body_text}</p>
</body>
</html>
"""


def interleave_nulls(tag_interior: str) -> str:
    """'html' -> '\\x00h\\x00t\\x00m\\x00l\\x00' as seen in damaged mementos."""
    return "\x00" + "\x00".join(tag_interior) + "\x00"
