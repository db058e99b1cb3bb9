//! Readers for the two accepted tree encodings.
//!
//! Both produce a flat [`RawTree`] arena in input order; canonicalization
//! (unary collapse, leaf counts, LCA index) happens in [`super::PriorTree`].

use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};

/// Input encoding of a prior tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeFormat {
    /// Nested parentheses, e.g. `(((1,2),(3,4)),(5,6));`.
    Newick,
    /// Recursive `{"name": .., "children": [..]}` objects.
    Json,
}

impl TreeFormat {
    /// `.json` selects [`TreeFormat::Json`]; anything else is read as Newick.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => TreeFormat::Json,
            _ => TreeFormat::Newick,
        }
    }
}

impl std::str::FromStr for TreeFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "newick" | "nwk" | "paren" => Ok(TreeFormat::Newick),
            "json" => Ok(TreeFormat::Json),
            _ => Err(Error::UnknownStrategy {
                kind: "tree format",
                name: s.to_string(),
                available: vec!["newick".into(), "json".into()],
            }),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub(crate) struct RawNode {
    pub label: Option<String>,
    pub children: Vec<usize>,
}

/// Uncanonicalized tree; node 0 is the root.
#[derive(Debug, Clone, Default)]
pub(crate) struct RawTree {
    pub nodes: Vec<RawNode>,
}

impl RawTree {
    fn add(&mut self, parent: Option<usize>, label: Option<String>) -> usize {
        let id = self.nodes.len();
        self.nodes.push(RawNode {
            label,
            children: Vec::new(),
        });
        if let Some(p) = parent {
            self.nodes[p].children.push(id);
        }
        id
    }
}

pub(crate) fn parse(text: &str, format: TreeFormat) -> Result<RawTree> {
    match format {
        TreeFormat::Newick => NewickParser::new(text).parse(),
        TreeFormat::Json => parse_json(text),
    }
}

struct NewickParser<'a> {
    text: &'a str,
    pos: usize,
}

enum State {
    ExpectSubtree,
    AfterSubtree,
}

impl<'a> NewickParser<'a> {
    fn new(text: &'a str) -> Self {
        NewickParser { text, pos: 0 }
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            position: self.pos,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    /// Skips whitespace and `[...]` comments.
    fn skip_trivia(&mut self) -> Result<()> {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('[') => {
                    let start = self.pos;
                    match self.text[self.pos..].find(']') {
                        Some(off) => self.pos += off + 1,
                        None => {
                            self.pos = start;
                            return self.err("unterminated comment");
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn is_delimiter(c: char) -> bool {
        c.is_whitespace() || matches!(c, '(' | ')' | ',' | ';' | ':' | '"' | '[' | ']')
    }

    fn label(&mut self) -> Result<Option<String>> {
        match self.peek() {
            Some('"') => {
                let start = self.pos;
                self.bump();
                let mut out = String::new();
                loop {
                    match self.bump() {
                        Some('"') => return Ok(Some(out)),
                        Some('\\') => match self.bump() {
                            Some('n') => out.push('\n'),
                            Some('t') => out.push('\t'),
                            Some(c @ ('"' | '\\')) => out.push(c),
                            Some(c) => return self.err(format!("unknown escape '\\{c}'")),
                            None => break,
                        },
                        Some(c) => out.push(c),
                        None => break,
                    }
                }
                self.pos = start;
                self.err("unterminated quoted label")
            }
            _ => {
                let start = self.pos;
                while let Some(c) = self.peek() {
                    if Self::is_delimiter(c) {
                        break;
                    }
                    self.bump();
                }
                if self.pos == start {
                    Ok(None)
                } else {
                    Ok(Some(self.text[start..self.pos].to_string()))
                }
            }
        }
    }

    /// Branch lengths are accepted and discarded.
    fn branch_length(&mut self) -> Result<()> {
        if self.peek() != Some(':') {
            return Ok(());
        }
        self.bump();
        self.skip_trivia()?;
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-') {
                self.bump();
            } else {
                break;
            }
        }
        if self.text[start..self.pos].parse::<f64>().is_err() {
            self.pos = start;
            return self.err("invalid branch length");
        }
        Ok(())
    }

    fn parse(mut self) -> Result<RawTree> {
        let mut tree = RawTree::default();
        let mut open: Vec<usize> = Vec::new();
        let mut state = State::ExpectSubtree;

        self.skip_trivia()?;
        if matches!(self.peek(), None | Some(';')) {
            return Err(Error::EmptyTree);
        }

        loop {
            self.skip_trivia()?;
            match state {
                State::ExpectSubtree => {
                    if self.peek() == Some('(') {
                        self.bump();
                        let id = tree.add(open.last().copied(), None);
                        open.push(id);
                    } else {
                        match self.label()? {
                            Some(label) => {
                                tree.add(open.last().copied(), Some(label));
                                state = State::AfterSubtree;
                            }
                            None => {
                                return match self.peek() {
                                    Some(c) => self.err(format!("expected a label or '(' but found '{c}'")),
                                    None => self.err("unexpected end of input"),
                                }
                            }
                        }
                    }
                }
                State::AfterSubtree => {
                    self.branch_length()?;
                    self.skip_trivia()?;
                    match self.peek() {
                        Some(',') if !open.is_empty() => {
                            self.bump();
                            state = State::ExpectSubtree;
                        }
                        Some(')') if !open.is_empty() => {
                            self.bump();
                            let closed = open.pop().expect("non-empty");
                            self.skip_trivia()?;
                            if let Some(name) = self.label()? {
                                tree.nodes[closed].label = Some(name);
                            }
                        }
                        Some(';') | None if open.is_empty() => {
                            if self.peek() == Some(';') {
                                self.bump();
                            }
                            self.skip_trivia()?;
                            if self.peek().is_some() {
                                return self.err("trailing characters after tree");
                            }
                            return Ok(tree);
                        }
                        None => return self.err("unexpected end of input: unclosed '('"),
                        Some(c) => return self.err(format!("unexpected '{c}'")),
                    }
                }
            }
        }
    }
}

fn json_offset(text: &str, line: usize, column: usize) -> usize {
    let mut offset = 0;
    for (i, l) in text.split_inclusive('\n').enumerate() {
        if i + 1 == line {
            return offset + column.saturating_sub(1).min(l.len());
        }
        offset += l.len();
    }
    offset
}

fn parse_json(text: &str) -> Result<RawTree> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Syntax {
        position: json_offset(text, e.line(), e.column()),
        message: e.to_string(),
    })?;

    let mut tree = RawTree::default();
    let mut stack: Vec<(&Value, Option<usize>, String)> = vec![(&value, None, "$".to_string())];
    while let Some((node, parent, path)) = stack.pop() {
        let obj = node
            .as_object()
            .ok_or_else(|| Error::TreeStructure(format!("{path}: expected an object")))?;
        let name = match obj.get("name") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => {
                return Err(Error::TreeStructure(format!("{path}: \"name\" must be a string")))
            }
        };
        match obj.get("children") {
            None => {
                if name.is_none() {
                    return Err(Error::TreeStructure(format!("{path}: leaf without a name")));
                }
                tree.add(parent, name);
            }
            Some(Value::Array(children)) => {
                if children.is_empty() {
                    return Err(Error::TreeStructure(format!(
                        "{path}: \"children\" must be non-empty (omit it for leaves)"
                    )));
                }
                let id = tree.add(parent, name);
                // Reverse push keeps children in input order.
                for (i, child) in children.iter().enumerate().rev() {
                    stack.push((child, Some(id), format!("{path}.children[{i}]")));
                }
            }
            Some(_) => {
                return Err(Error::TreeStructure(format!("{path}: \"children\" must be an array")))
            }
        }
    }
    Ok(tree)
}
