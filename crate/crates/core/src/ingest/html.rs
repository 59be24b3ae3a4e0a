//! Lenient, single-pass HTML reading.
//!
//! The tokenizer never fails: unknown constructs become text, unterminated
//! tags run to end of input, and stray end tags are dropped. The tree builder
//! auto-closes whatever is still open when an ancestor's end tag arrives, so
//! `<div><p>a</div>` yields a `p` closed at the `div` boundary.

use crate::time::Timestamp;

use super::DocumentMeta;

const VOID_ELEMENTS: &[&str] = &[
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "param", "source",
    "track", "wbr",
];

/// Elements whose content is not markup.
const RAW_TEXT_ELEMENTS: &[&str] = &["script", "style", "textarea", "title"];

const INLINE_ELEMENTS: &[&str] = &[
    "a", "abbr", "b", "bdi", "bdo", "br", "cite", "code", "em", "font", "i", "img", "kbd", "mark",
    "q", "s", "small", "span", "strong", "sub", "sup", "time", "u", "var", "wbr",
];

/// Start tags that implicitly close an open `p`.
const CLOSES_P: &[&str] = &[
    "address",
    "article",
    "aside",
    "blockquote",
    "div",
    "dl",
    "fieldset",
    "figure",
    "footer",
    "form",
    "h1",
    "h2",
    "h3",
    "h4",
    "h5",
    "h6",
    "header",
    "hr",
    "li",
    "main",
    "nav",
    "ol",
    "p",
    "pre",
    "section",
    "table",
    "ul",
];

fn is_inline(name: &str) -> bool {
    INLINE_ELEMENTS.contains(&name)
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Start {
        name: String,
        attrs: Vec<(String, String)>,
        self_closing: bool,
    },
    End {
        name: String,
    },
    Text(String),
}

struct Tokenizer<'a> {
    src: &'a str,
    pos: usize,
    pending: Vec<Token>,
}

impl<'a> Tokenizer<'a> {
    fn new(src: &'a str) -> Self {
        Tokenizer {
            src,
            pos: 0,
            pending: Vec::new(),
        }
    }

    fn bytes(&self) -> &'a [u8] {
        self.src.as_bytes()
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    /// Advances to just past the next occurrence of `needle`, or to end of input.
    fn skip_past(&mut self, needle: &str) {
        match self.rest().find(needle) {
            Some(i) => self.pos += i + needle.len(),
            None => self.pos = self.src.len(),
        }
    }

    fn read_name(&mut self) -> String {
        let start = self.pos;
        let b = self.bytes();
        while self.pos < b.len()
            && !b[self.pos].is_ascii_whitespace()
            && !matches!(b[self.pos], b'>' | b'/' | b'=')
        {
            self.pos += 1;
        }
        self.src[start..self.pos].to_ascii_lowercase()
    }

    fn skip_ws(&mut self) {
        let b = self.bytes();
        while self.pos < b.len() && b[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn read_attr_value(&mut self) -> String {
        let b = self.bytes();
        if self.pos >= b.len() {
            return String::new();
        }
        match b[self.pos] {
            q @ (b'"' | b'\'') => {
                let start = self.pos + 1;
                let end = self.src[start..]
                    .find(q as char)
                    .map_or(self.src.len(), |i| start + i);
                self.pos = (end + 1).min(self.src.len());
                self.src[start..end].to_string()
            }
            _ => {
                let start = self.pos;
                while self.pos < b.len()
                    && !b[self.pos].is_ascii_whitespace()
                    && b[self.pos] != b'>'
                {
                    self.pos += 1;
                }
                self.src[start..self.pos].to_string()
            }
        }
    }

    fn read_start_tag(&mut self) -> Token {
        // positioned on the first letter of the name
        let name = self.read_name();
        let mut attrs = Vec::new();
        let mut self_closing = false;
        loop {
            self.skip_ws();
            let b = self.bytes();
            if self.pos >= b.len() {
                break;
            }
            match b[self.pos] {
                b'>' => {
                    self.pos += 1;
                    break;
                }
                b'/' => {
                    self.pos += 1;
                    if self.bytes().get(self.pos) == Some(&b'>') {
                        self.pos += 1;
                        self_closing = true;
                        break;
                    }
                }
                b'=' => {
                    // value without a name
                    self.pos += 1;
                    self.skip_ws();
                    self.read_attr_value();
                }
                _ => {
                    let attr = self.read_name();
                    self.skip_ws();
                    let value = if self.bytes().get(self.pos) == Some(&b'=') {
                        self.pos += 1;
                        self.skip_ws();
                        self.read_attr_value()
                    } else {
                        String::new()
                    };
                    attrs.push((attr, value));
                }
            }
        }
        Token::Start {
            name,
            attrs,
            self_closing,
        }
    }

    /// Content of a raw-text element up to its (case-insensitive) end tag.
    fn read_raw_text(&mut self, name: &str) -> Token {
        let lower = self.rest().to_ascii_lowercase();
        let close = format!("</{name}");
        let end = lower.find(&close).map_or(self.src.len(), |i| self.pos + i);
        let text = self.src[self.pos..end].to_string();
        self.pos = end;
        if self.pos < self.src.len() {
            self.skip_past(">");
        }
        self.pending.push(Token::End {
            name: name.to_string(),
        });
        Token::Text(text)
    }
}

impl Iterator for Tokenizer<'_> {
    type Item = Token;

    fn next(&mut self) -> Option<Token> {
        if let Some(tok) = self.pending.pop() {
            return Some(tok);
        }
        loop {
            let b = self.bytes();
            if self.pos >= b.len() {
                return None;
            }
            if b[self.pos] != b'<' {
                let start = self.pos;
                let end = self.rest().find('<').map_or(self.src.len(), |i| start + i);
                self.pos = end;
                return Some(Token::Text(self.src[start..end].to_string()));
            }
            let next = b.get(self.pos + 1).copied();
            match next {
                Some(b'!') if self.rest().starts_with("<!--") => {
                    self.pos += 4;
                    self.skip_past("-->");
                }
                Some(b'!') | Some(b'?') => self.skip_past(">"),
                Some(b'/') => {
                    self.pos += 2;
                    let name = self.read_name();
                    self.skip_past(">");
                    if !name.is_empty() {
                        return Some(Token::End { name });
                    }
                }
                Some(c) if c.is_ascii_alphabetic() => {
                    self.pos += 1;
                    let tok = self.read_start_tag();
                    if let Token::Start {
                        name,
                        self_closing: false,
                        ..
                    } = &tok
                    {
                        if RAW_TEXT_ELEMENTS.contains(&name.as_str()) {
                            let name = name.clone();
                            let text = self.read_raw_text(&name);
                            self.pending.push(text);
                        }
                    }
                    return Some(tok);
                }
                _ => {
                    self.pos += 1;
                    return Some(Token::Text("<".to_string()));
                }
            }
        }
    }
}

type NodeId = usize;

#[derive(Debug)]
enum Node {
    Element {
        name: String,
        attrs: Vec<(String, String)>,
        children: Vec<NodeId>,
    },
    Text(String),
}

/// A parsed document. Node 0 is a synthetic root.
#[derive(Debug)]
pub(crate) struct Dom {
    nodes: Vec<Node>,
}

impl Dom {
    pub(crate) fn parse(html: &str) -> Dom {
        let mut nodes = vec![Node::Element {
            name: "#root".to_string(),
            attrs: Vec::new(),
            children: Vec::new(),
        }];
        let mut open: Vec<NodeId> = vec![0];

        fn push_child(nodes: &mut [Node], parent: NodeId, child: NodeId) {
            if let Node::Element { children, .. } = &mut nodes[parent] {
                children.push(child);
            }
        }
        let name_of = |nodes: &[Node], id: NodeId| -> String {
            match &nodes[id] {
                Node::Element { name, .. } => name.clone(),
                Node::Text(_) => String::new(),
            }
        };

        for tok in Tokenizer::new(html) {
            match tok {
                Token::Text(text) => {
                    let parent = *open.last().unwrap();
                    let last = match &nodes[parent] {
                        Node::Element { children, .. } => children.last().copied(),
                        Node::Text(_) => None,
                    };
                    if let Some(Node::Text(prev)) = last.map(|id| &mut nodes[id]) {
                        prev.push_str(&text);
                    } else {
                        nodes.push(Node::Text(text));
                        let id = nodes.len() - 1;
                        push_child(&mut nodes, parent, id);
                    }
                }
                Token::Start {
                    name,
                    attrs,
                    self_closing,
                } => {
                    if CLOSES_P.contains(&name.as_str()) {
                        // close a `p` reachable through inline elements only
                        let mut cut = None;
                        for (depth, &id) in open.iter().enumerate().skip(1).rev() {
                            let n = name_of(&nodes, id);
                            if n == "p" {
                                cut = Some(depth);
                                break;
                            }
                            if !is_inline(&n) {
                                break;
                            }
                        }
                        if let Some(depth) = cut {
                            open.truncate(depth);
                        }
                    }
                    if name == "li" {
                        let mut cut = None;
                        for (depth, &id) in open.iter().enumerate().skip(1).rev() {
                            let n = name_of(&nodes, id);
                            if n == "li" {
                                cut = Some(depth);
                                break;
                            }
                            if n == "ul" || n == "ol" {
                                break;
                            }
                        }
                        if let Some(depth) = cut {
                            open.truncate(depth);
                        }
                    }
                    let parent = *open.last().unwrap();
                    let void = VOID_ELEMENTS.contains(&name.as_str());
                    nodes.push(Node::Element {
                        name,
                        attrs,
                        children: Vec::new(),
                    });
                    let id = nodes.len() - 1;
                    push_child(&mut nodes, parent, id);
                    if !void && !self_closing {
                        open.push(id);
                    }
                }
                Token::End { name } => {
                    if let Some(depth) = open
                        .iter()
                        .skip(1)
                        .rposition(|&id| name_of(&nodes, id) == name)
                    {
                        open.truncate(depth + 1);
                    }
                }
            }
        }
        Dom { nodes }
    }

    fn element(&self, id: NodeId) -> Option<(&str, &[(String, String)], &[NodeId])> {
        match &self.nodes[id] {
            Node::Element {
                name,
                attrs,
                children,
            } => Some((name, attrs, children)),
            Node::Text(_) => None,
        }
    }

    fn attr(&self, id: NodeId, key: &str) -> Option<&str> {
        self.element(id)?
            .1
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn has_class(&self, id: NodeId, class_name: &str) -> bool {
        self.attr(id, "class")
            .is_some_and(|c| c.split_ascii_whitespace().any(|c| c == class_name))
    }

    /// Elements in document order.
    fn descendants(&self, id: NodeId, out: &mut Vec<NodeId>) {
        if let Some((_, _, children)) = self.element(id) {
            for &c in children {
                if self.element(c).is_some() {
                    out.push(c);
                    self.descendants(c, out);
                }
            }
        }
    }

    fn raw_text(&self, id: NodeId, out: &mut String) {
        match &self.nodes[id] {
            Node::Text(t) => out.push_str(t),
            Node::Element { name, children, .. } => {
                if matches!(name.as_str(), "script" | "style") {
                    return;
                }
                let spaced = !is_inline(name) || name == "br";
                if spaced {
                    out.push(' ');
                }
                for &c in children {
                    self.raw_text(c, out);
                }
                if spaced {
                    out.push(' ');
                }
            }
        }
    }

    /// Tag-free text with entities decoded and whitespace collapsed.
    fn text(&self, id: NodeId) -> String {
        let mut raw = String::new();
        self.raw_text(id, &mut raw);
        collapse_whitespace(&decode_entities(&raw))
    }

    fn is_paragraph_level(&self, id: NodeId) -> bool {
        match self.element(id) {
            Some(("p" | "li", _, _)) => true,
            Some(("div", _, children)) => children.iter().all(|&c| match self.element(c) {
                None => true,
                Some((name, _, _)) => is_inline(name),
            }),
            _ => false,
        }
    }

    fn harvest(&self, id: NodeId, out: &mut Vec<String>) {
        if self.is_paragraph_level(id) {
            let text = self.text(id);
            if !text.is_empty() {
                out.push(text);
            }
            return;
        }
        if let Some((_, _, children)) = self.element(id) {
            for &c in children {
                if self.element(c).is_some() {
                    self.harvest(c, out);
                }
            }
        }
    }
}

/// Collapses every whitespace run to one space and trims.
pub(crate) fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Decodes the XML named entities, `&nbsp;`, and numeric character references.
/// Unrecognized references are left as written.
pub fn decode_entities(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        rest = &rest[amp..];
        let decoded = rest[1..]
            .find(';')
            .filter(|&semi| semi > 0 && semi <= 10)
            .and_then(|semi| {
                let body = &rest[1..1 + semi];
                let ch = match body {
                    "amp" => Some('&'),
                    "lt" => Some('<'),
                    "gt" => Some('>'),
                    "quot" => Some('"'),
                    "apos" => Some('\''),
                    "nbsp" => Some(' '),
                    _ => {
                        let num = body.strip_prefix('#')?;
                        let code = match num.strip_prefix(['x', 'X']) {
                            Some(hex) => u32::from_str_radix(hex, 16).ok()?,
                            None => num.parse::<u32>().ok()?,
                        };
                        Some(char::from_u32(code).unwrap_or('\u{FFFD}'))
                    }
                }?;
                Some((ch, semi + 2))
            });
        match decoded {
            Some((ch, len)) => {
                out.push(ch);
                rest = &rest[len..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

/// Text of every paragraph-level element (`p`, `li`, or a `div` with only
/// inline children) inside each element whose class list contains `class_name`.
///
/// Containers nested in an already-matched container are not visited twice.
/// Blocks that are empty after whitespace collapsing are dropped.
pub fn extract_review_blocks(html: &str, class_name: &str) -> Vec<String> {
    let dom = Dom::parse(html);
    let mut out = Vec::new();
    let mut stack = vec![0];
    while let Some(id) = stack.pop() {
        if id != 0 && dom.has_class(id, class_name) {
            dom.harvest(id, &mut out);
            continue;
        }
        if let Some((_, _, children)) = dom.element(id) {
            stack.extend(
                children
                    .iter()
                    .rev()
                    .copied()
                    .filter(|&c| dom.element(c).is_some()),
            );
        }
    }
    out
}

/// Title, author and creation date from the document head.
pub fn extract_metadata(html: &str, source_uri: &str, now: Timestamp) -> DocumentMeta {
    let dom = Dom::parse(html);
    let mut elements = Vec::new();
    dom.descendants(0, &mut elements);

    let non_empty = |s: String| (!s.is_empty()).then_some(s);
    let title = elements
        .iter()
        .find(|&&id| matches!(dom.element(id), Some(("title", _, _))))
        .and_then(|&id| non_empty(dom.text(id)));
    let meta_content = |key: &str| -> Option<String> {
        elements
            .iter()
            .filter(|&&id| matches!(dom.element(id), Some(("meta", _, _))))
            .find(|&&id| {
                dom.attr(id, "name")
                    .is_some_and(|n| n.trim().eq_ignore_ascii_case(key))
            })
            .and_then(|&id| dom.attr(id, "content"))
            .map(|c| collapse_whitespace(&decode_entities(c)))
            .and_then(non_empty)
    };

    DocumentMeta {
        source_uri: source_uri.to_string(),
        title,
        author: meta_content("author"),
        created_at: meta_content("date").and_then(|d| Timestamp::parse(&d)),
        retrieved_at: now,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn now() -> Timestamp {
        Timestamp::parse("2024-03-01T09:30:00Z").unwrap()
    }

    #[test]
    fn harvests_paragraphs_of_matching_container() {
        let html = r#"<div class="portfolioContainer"><p>Hi</p><p>Yo</p></div>"#;
        assert_eq!(
            extract_review_blocks(html, "portfolioContainer"),
            ["Hi", "Yo"]
        );
    }

    #[test]
    fn no_matching_container_gives_nothing() {
        let html = r#"<div class="x"><p>Hi</p></div>"#;
        assert!(extract_review_blocks(html, "portfolioContainer").is_empty());
    }

    #[test]
    fn unclosed_paragraph_is_closed_at_container_end() {
        let html = r#"<div class="a portfolioContainer"><p>A &amp; B<br>C</div>"#;
        assert_eq!(
            extract_review_blocks(html, "portfolioContainer"),
            ["A & B C"]
        );
    }

    #[test]
    fn list_items_and_leaf_divs_count_as_paragraphs() {
        let html = r#"<section class="c"><ul><li>one<li>two</ul><div><b>three</b> four</div>
            <div><div>five</div></div></section>"#;
        assert_eq!(
            extract_review_blocks(html, "c"),
            ["one", "two", "three four", "five"]
        );
    }

    #[test]
    fn container_that_is_itself_a_leaf_block() {
        let html = r#"<div class="c">  just
            text </div>"#;
        assert_eq!(extract_review_blocks(html, "c"), ["just text"]);
    }

    #[test]
    fn text_outside_containers_and_scripts_is_ignored() {
        let html = r#"<p>nav</p><div class=c><script>var x = "<p>no</p>";</script>
            <p>yes</p><!-- <p>comment</p> --></div><p>footer</p>"#;
        assert_eq!(extract_review_blocks(html, "c"), ["yes"]);
    }

    #[test]
    fn attribute_quoting_variants() {
        let html = "<div class='c'><p title=\"a > b\">x</p></div><div class=c><p>y</p></div>";
        assert_eq!(extract_review_blocks(html, "c"), ["x", "y"]);
    }

    #[test]
    fn class_match_is_whole_word() {
        let html = r#"<div class="portfolioContainerX"><p>no</p></div>"#;
        assert!(extract_review_blocks(html, "portfolioContainer").is_empty());
    }

    #[test]
    fn implicit_paragraph_close_on_new_paragraph() {
        let html = r#"<div class=c><p>first<p>second</div>"#;
        assert_eq!(extract_review_blocks(html, "c"), ["first", "second"]);
    }

    #[test]
    fn entities() {
        assert_eq!(
            decode_entities("&lt;a&gt; &quot;q&quot; &#39;s&#x41;&apos; &bogus; & &amp;amp;"),
            "<a> \"q\" 'sA' &bogus; & &amp;"
        );
    }

    #[test]
    fn truncated_markup_terminates() {
        for html in [
            "<div class=c><p>a",
            "<div class=\"c",
            "<",
            "<!--",
            "</",
            "<p",
            "&#",
        ] {
            let _ = extract_review_blocks(html, "c");
        }
        assert_eq!(extract_review_blocks("<div class=c><p>a", "c"), ["a"]);
    }

    #[test]
    fn metadata_from_head() {
        let html = r#"<title>Rev</title><meta name="author" content="J">"#;
        let meta = extract_metadata(html, "f.html", now());
        assert_eq!(meta.title.as_deref(), Some("Rev"));
        assert_eq!(meta.author.as_deref(), Some("J"));
        assert_eq!(meta.created_at, None);
        assert_eq!(meta.retrieved_at, now());
        assert_eq!(meta.source_uri, "f.html");
    }

    #[test]
    fn metadata_from_empty_input() {
        let meta = extract_metadata("", "f.html", now());
        assert_eq!(meta.title, None);
        assert_eq!(meta.author, None);
        assert_eq!(meta.created_at, None);
        assert_eq!(meta.retrieved_at, now());
    }

    #[test]
    fn metadata_date() {
        let meta = extract_metadata(r#"<meta name="date" content="2020-01-02">"#, "u", now());
        assert_eq!(meta.created_at, Timestamp::parse("2020-01-02T00:00:00Z"));
        let bad = extract_metadata(r#"<meta name="date" content="last week">"#, "u", now());
        assert_eq!(bad.created_at, None);
    }
}
