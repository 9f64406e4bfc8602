"""Regenerate the committed fixture corpus from the wrapper builders.

Run as `python -m memharvest.testkit.regen` after adding or editing a base
page.  Base pages and golden texts are authored by hand and never touched
here; everything derived (wrapped variants, pathological pages, manifest)
is rewritten deterministically, and a test asserts the committed files
match this module's output.
"""
from __future__ import annotations

import json
from pathlib import Path

from . import CORPUS_DIR
from .wrappers import (
    WEBCITE_FRAMESET,
    interleave_nulls,
    meta_refresh_page,
    wayback_js_redirect_page,
    wrap_archive_is,
    wrap_plain,
    wrap_proni,
    wrap_uk_national_archives,
    wrap_wayback,
)

WRAPPERS = {
    "wayback": wrap_wayback,
    "uk-national-archives": wrap_uk_national_archives,
    "proni": wrap_proni,
    "archive-is": wrap_archive_is,
    "plain": wrap_plain,
}

WRAPPED_URI_TEMPLATES = {
    "wayback": "http://web.archive.org/web/20081126132802/http://example.com/{name}",
    "uk-national-archives": "http://webarchive.nationalarchives.gov.uk/20120405114247/http://example.com/{name}",
    "proni": "http://webarchive.proni.gov.uk/20111214024729/http://example.com/{name}",
    "archive-is": "http://archive.is/19961226114737/http://example.com/{name}",
    "plain": "http://example.com/pages/{name}",
}

WEBCITE_TOPFRAME = """<!DOCTYPE html>
<html>
<head>
<title>WebCite navigation</title>
</head>
<body>
<p>WebCite query result navigation bar.</p>
</body>
</html>
"""

WEBCITE_MAINFRAME = """<!DOCTYPE html>
<html>
<head>
<title>Archived Page</title>
</head>
<body>
<h1>Archived Page</h1>
<p>This is the memento payload served through the main frame.</p>
</body>
</html>
"""

WEBCITE_NO_SESSION = """<!DOCTYPE html>
<html>
<head>
<title>WebCite</title>
</head>
<body>
<p>No snapshot selected.</p>
</body>
</html>
"""


def _null_byte_page() -> bytes:
    html_tag = "<" + interleave_nulls("html") + ">"
    return (
        "<!DOCTYPE html>\n"
        f"{html_tag}\n"
        "<head>\n"
        "<title>Null Bytes</title>\n"
        "</head>\n"
        "<body>\n"
        "<p>Null bytes once hid inside the tags of this page.</p>\n"
        "</body>\n"
        "</html>\n"
    ).encode("utf-8")


def _latin1_cafe_page() -> bytes:
    return (
        "<!DOCTYPE html>\n"
        "<html>\n"
        "<head>\n"
        "<title>Café</title>\n"
        "</head>\n"
        "<body>\n"
        "<p>Le café est ouvert jusqu'à minuit.</p>\n"
        "</body>\n"
        "</html>\n"
    ).encode("iso-8859-1")


def _xml_decl_latin1_page() -> bytes:
    return (
        '<?xml version="1.0" encoding="ISO-8859-1"?>\n'
        '<!DOCTYPE html PUBLIC "-//W3C//DTD XHTML 1.0 Strict//EN" '
        '"http://www.w3.org/TR/xhtml1/DTD/xhtml1-strict.dtd">\n'
        '<html xmlns="http://www.w3.org/1999/xhtml">\n'
        "<head>\n"
        "<title>Café</title>\n"
        "</head>\n"
        "<body>\n"
        "<p>Le café est ouvert jusqu'à minuit.</p>\n"
        "</body>\n"
        "</html>\n"
    ).encode("iso-8859-1")


def _undecodable_page() -> bytes:
    # 0xE9 and 0xFF are invalid UTF-8 here; the page decodes under no step
    # of the detection algorithm when served as charset=utf-8.
    return (
        b"<!DOCTYPE html>\n<html>\n<head>\n<title>Broken</title>\n</head>\n"
        b"<body>\n<p>caf\xe9 \xff broken bytes</p>\n</body>\n</html>\n"
    )


def generate_into(corpus_dir: Path) -> dict:
    """Write derived fixtures under corpus_dir and return the manifest dict."""
    bases_dir = corpus_dir / "bases"
    wrapped_dir = corpus_dir / "wrapped"
    patho_dir = corpus_dir / "pathological"
    wrapped_dir.mkdir(parents=True, exist_ok=True)
    patho_dir.mkdir(parents=True, exist_ok=True)

    manifest: dict = {"bases": {}, "wrapped": [], "pathological": {}}

    for base_path in sorted(bases_dir.glob("*.html")):
        name = base_path.stem
        manifest["bases"][name] = {
            "file": f"bases/{name}.html",
            "expected_text": f"expected/{name}.txt",
        }
        html = base_path.read_text(encoding="utf-8")
        for archive, wrapper in WRAPPERS.items():
            uri = WRAPPED_URI_TEMPLATES[archive].format(name=name)
            if archive in ("wayback", "archive-is"):
                wrapped = wrapper(html, original_uri=f"http://example.com/{name}")
            else:
                wrapped = wrapper(html)
            out = wrapped_dir / f"{name}__{archive}.html"
            out.write_text(wrapped, encoding="utf-8")
            manifest["wrapped"].append(
                {"base": name, "archive": archive, "file": f"wrapped/{out.name}", "uri": uri}
            )

    html_ct = "text/html"

    def patho(name: str, content: bytes | str, content_type: str = html_ct, **extra):
        path = patho_dir / f"{name}.html"
        if isinstance(content, str):
            path.write_text(content, encoding="utf-8")
        else:
            path.write_bytes(content)
        manifest["pathological"][name] = {
            "file": f"pathological/{name}.html",
            "content_type": content_type,
            **extra,
        }

    # noscript fixtures are hand-authored; only record them
    for name in ("noscript_unclosed", "noscript_faux"):
        if not (patho_dir / f"{name}.html").is_file():
            raise FileNotFoundError(f"hand-authored fixture {name}.html missing")
        manifest["pathological"][name] = {
            "file": f"pathological/{name}.html",
            "content_type": html_ct,
        }

    patho("null_bytes", _null_byte_page())
    patho("latin1_cafe", _latin1_cafe_page(), "text/html; charset=iso-8859-1")
    patho("xml_decl_latin1", _xml_decl_latin1_page(), "text/html; charset=utf-8")
    patho("undecodable", _undecodable_page(), "text/html; charset=utf-8")
    patho("meta_refresh_url", meta_refresh_page("0; url=/memento-final"), target="/memento-final")
    patho("meta_refresh_self", meta_refresh_page("300", body_text="This page reloads itself."))
    patho("js_redirect_a", wayback_js_redirect_page("/js-redirect-b"), target="/js-redirect-b")
    patho("js_redirect_b", wayback_js_redirect_page("/memento-final"), target="/memento-final")
    patho("webcite_frameset", WEBCITE_FRAMESET)
    patho("webcite_topframe", WEBCITE_TOPFRAME)
    patho("webcite_mainframe", WEBCITE_MAINFRAME)
    patho("webcite_nosession", WEBCITE_NO_SESSION)

    (corpus_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    return manifest


def main() -> None:
    generate_into(CORPUS_DIR)
    print(f"corpus regenerated under {CORPUS_DIR}")


if __name__ == "__main__":
    main()
