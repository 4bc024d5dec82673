"""Tests for source masking and call-site scanning.

"""
from hypothesis import given, strategies as st

from cmind.parsing.lexer import (mask_source, line_of, matching_close, matching_open,
                                 call_sites)


def test_mask_keeps_length_and_newlines():
    text = ('#include <stdio.h>\n'
            '/* f(1) { */ int g(void) { // h(2)\n'
            '  return puts("i(3) }");\n'
            '}\n')
    masked = mask_source(text)

    assert len(masked) == len(text)
    assert [k for k, c in enumerate(masked) if c == '\n'] == \
        [k for k, c in enumerate(text) if c == '\n']
    assert 'include' not in masked
    assert 'f(1)' not in masked and 'h(2)' not in masked and 'i(3)' not in masked
    assert masked.count('{') == 1 and masked.count('}') == 1
    assert 'int g(void) {' in masked


def test_mask_continued_directive():
    text = '#define TWICE(x) \\\n  ((x) + (x))\nint y;\n'
    masked = mask_source(text)

    assert masked.split('\n')[0].strip() == ''
    assert masked.split('\n')[1].strip() == ''
    assert masked.split('\n')[2] == 'int y;'


def test_mask_char_literals_and_escapes():
    text = "char a = '{'; char *s = \"\\\"}\"; int z;"
    masked = mask_source(text)

    assert '{' not in masked and '}' not in masked
    assert masked.endswith('int z;')


@given(st.text(alphabet='ab(){}/*"\'#\\\n ;', max_size=200))
def test_mask_preserves_geometry(text):
    masked = mask_source(text)
    assert len(masked) == len(text)
    assert masked.count('\n') == text.count('\n')


def test_line_of():
    text = 'a\nb\nc'
    assert line_of(text, 0) == 1
    assert line_of(text, 2) == 2
    assert line_of(text, 4) == 3


def test_matching_brackets():
    text = 'f(a, g(b)) { if (x) { y; } }'
    assert matching_close(text, text.index('{')) == len(text) - 1
    assert matching_open(text, text.index(')) ') + 1, '(', ')') == 1
    assert matching_close('{ {', 0) == -1


def test_call_sites():
    masked = mask_source('x = foo(1) + Bar::baz (2); if (y) while (z) sizeof(int); obj.m();')
    names = [name for _, name in call_sites(masked)]

    assert names == ['foo', 'Bar::baz', 'm']


def test_call_sites_destructor():
    names = [name for _, name in call_sites('Widget::~Widget() ;')]
    assert names == ['Widget::~Widget']
