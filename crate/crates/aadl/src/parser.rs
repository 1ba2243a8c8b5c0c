//! Recursive-descent parser for the subset described in `docs/aadl-subset.md`.

use reqimpact_core::model::PortDirection;

use crate::diagnostic::{ImportDiagnostic, Span};
use crate::lexer::{lex, Tok, Token};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    System,
    Process,
    Thread,
    Device,
    Data,
    Subprogram,
}

impl Category {
    pub const ALL: [Category; 6] =
        [Category::System, Category::Process, Category::Thread, Category::Device, Category::Data, Category::Subprogram];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::System => "system",
            Category::Process => "process",
            Category::Thread => "thread",
            Category::Device => "device",
            Category::Data => "data",
            Category::Subprogram => "subprogram",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        Category::ALL.into_iter().find(|c| c.as_str().eq_ignore_ascii_case(word))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PortKind {
    EventData,
    Data,
    Event,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Feature {
    pub name: String,
    pub direction: PortDirection,
    pub kind: PortKind,
    pub at: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subcomponent {
    pub name: String,
    pub category: Category,
    /// Type name of the classifier, without package prefix or implementation suffix.
    pub classifier: Option<String>,
    pub at: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortRef {
    pub component: Option<String>,
    pub port: String,
    pub at: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectionDecl {
    pub name: String,
    pub from: PortRef,
    pub to: PortRef,
    pub bidirectional: bool,
    pub at: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Declaration {
    pub category: Category,
    pub name: String,
    /// `Some("impl")` for `<category> implementation Name.impl`.
    pub implementation: Option<String>,
    pub features: Vec<Feature>,
    pub subcomponents: Vec<Subcomponent>,
    pub connections: Vec<ConnectionDecl>,
    pub at: Span,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Unit {
    pub package: Option<String>,
    pub declarations: Vec<Declaration>,
}

const SECTIONS: [&str; 9] =
    ["features", "subcomponents", "connections", "properties", "flows", "modes", "annex", "calls", "prototypes"];

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    diags: Vec<ImportDiagnostic>,
}

pub fn parse(text: &str) -> (Unit, Vec<ImportDiagnostic>) {
    let (tokens, diags) = lex(text);
    let mut p = Parser { tokens, pos: 0, diags };
    let unit = p.unit();
    (unit, p.diags)
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_at(&self, offset: usize) -> &Token {
        &self.tokens[(self.pos + offset).min(self.tokens.len() - 1)]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn at_eof(&self) -> bool {
        self.peek().tok == Tok::Eof
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if &self.peek().tok == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.peek().is_keyword(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error(&mut self, at: Span, message: impl Into<String>) {
        self.diags.push(ImportDiagnostic::error(at, message));
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Option<Span> {
        if self.peek().tok == tok {
            Some(self.bump().at)
        } else {
            let t = self.peek().clone();
            self.error(t.at, format!("expected {what}, found {}", describe(&t.tok)));
            None
        }
    }

    fn ident(&mut self, what: &str) -> Option<(String, Span)> {
        match self.peek().tok.clone() {
            Tok::Ident(s) => {
                let at = self.bump().at;
                Some((s, at))
            }
            other => {
                let at = self.peek().at;
                self.error(at, format!("expected {what}, found {}", describe(&other)));
                None
            }
        }
    }

    /// Skips past the next `;` at the current nesting.
    fn recover_item(&mut self) {
        while !self.at_eof() {
            if self.bump().tok == Tok::Semi {
                return;
            }
        }
    }

    fn at_section_or_end(&self) -> bool {
        let t = self.peek();
        t.tok == Tok::Eof || t.is_keyword("end") || SECTIONS.iter().any(|s| t.is_keyword(s))
    }

    fn unit(&mut self) -> Unit {
        let mut unit = Unit::default();
        if self.eat_keyword("package") {
            if let Some(name) = self.qualified_name() {
                unit.package = Some(name);
            }
            self.eat_keyword("public");
        }
        while !self.at_eof() {
            let t = self.peek().clone();
            if t.is_keyword("end") {
                // closing `end Pkg;` of the package wrapper
                self.bump();
                let _ = self.qualified_name();
                self.eat(&Tok::Semi);
                if unit.package.is_none() {
                    self.error(t.at, "`end` without a matching declaration");
                }
                continue;
            }
            if t.is_keyword("with") || t.is_keyword("public") || t.is_keyword("private") {
                self.bump();
                if t.is_keyword("with") {
                    self.recover_item();
                }
                continue;
            }
            if let Tok::Ident(word) = &t.tok {
                if let Some(category) = Category::from_keyword(word) {
                    self.bump();
                    if let Some(decl) = self.declaration(category, t.at) {
                        unit.declarations.push(decl);
                    }
                    continue;
                }
                if is_unsupported_category(word) || word.eq_ignore_ascii_case("property") {
                    self.skip_declaration(t.at, word);
                    continue;
                }
            }
            self.error(t.at, format!("expected a component declaration, found {}", describe(&t.tok)));
            self.bump();
        }
        unit
    }

    fn qualified_name(&mut self) -> Option<String> {
        let (mut name, _) = self.ident("a name")?;
        while self.peek().tok == Tok::DoubleColon || self.peek().tok == Tok::Dot {
            let sep = if self.bump().tok == Tok::Dot { "." } else { "::" };
            let (part, _) = self.ident("a name")?;
            name.push_str(sep);
            name.push_str(&part);
        }
        Some(name)
    }

    /// Unsupported declaration kinds are skipped through their `end Name;`.
    fn skip_declaration(&mut self, at: Span, word: &str) {
        self.diags.push(ImportDiagnostic::warning(at, format!("unsupported construct `{word}` declaration skipped")));
        self.bump();
        while !self.at_eof() {
            if self.peek().is_keyword("end") && matches!(self.peek_at(1).tok, Tok::Ident(_)) {
                self.bump();
                let _ = self.qualified_name();
                self.eat(&Tok::Semi);
                return;
            }
            self.bump();
        }
    }

    fn declaration(&mut self, category: Category, at: Span) -> Option<Declaration> {
        let is_impl = self.eat_keyword("implementation");
        let Some((name, _)) = self.ident("a component name") else {
            self.skip_to_end();
            return None;
        };
        let mut implementation = None;
        if self.eat(&Tok::Dot) {
            implementation = self.ident("an implementation name").map(|(s, _)| s);
        }
        if is_impl && implementation.is_none() {
            self.error(at, format!("implementation of `{name}` needs a `{name}.<impl>` name"));
            implementation = Some(String::new());
        }
        if !is_impl && implementation.is_some() {
            self.error(at, format!("`{name}.{}` names an implementation; add the `implementation` keyword", implementation.clone().unwrap_or_default()));
        }
        let mut decl = Declaration {
            category,
            name: name.clone(),
            implementation: implementation.clone(),
            features: vec![],
            subcomponents: vec![],
            connections: vec![],
            at,
        };
        loop {
            let t = self.peek().clone();
            if t.tok == Tok::Eof {
                self.error(at, format!("declaration `{name}` is missing `end {name};`"));
                return None;
            }
            if t.is_keyword("end") {
                self.bump();
                let closing = self.qualified_name();
                let expected = match &implementation {
                    Some(i) => format!("{name}.{i}"),
                    None => name.clone(),
                };
                if closing.as_deref() != Some(expected.as_str()) {
                    self.error(t.at, format!("`end` does not match `{expected}`"));
                }
                self.expect(Tok::Semi, "`;`");
                return Some(decl);
            }
            if self.eat_keyword("features") {
                self.features(&mut decl.features);
            } else if self.eat_keyword("subcomponents") {
                self.subcomponents(&mut decl.subcomponents);
            } else if self.eat_keyword("connections") {
                self.connections(&mut decl.connections);
            } else if let Tok::Ident(word) = &t.tok {
                let word = word.clone();
                self.bump();
                self.diags.push(ImportDiagnostic::warning(t.at, format!("unsupported construct `{word}` skipped")));
                self.skip_section();
            } else {
                self.error(t.at, format!("unexpected {} in `{name}`", describe(&t.tok)));
                self.bump();
            }
        }
    }

    fn skip_section(&mut self) {
        while !self.at_section_or_end() {
            self.bump();
        }
    }

    fn skip_to_end(&mut self) {
        while !self.at_eof() && !self.peek().is_keyword("end") {
            self.bump();
        }
        if !self.at_eof() {
            self.bump();
            let _ = self.qualified_name();
            self.eat(&Tok::Semi);
        }
    }

    /// `name :` at the start of a section item.
    fn item_head(&mut self) -> Option<(String, Span)> {
        let head = self.ident("an item name")?;
        self.expect(Tok::Colon, "`:`")?;
        Some(head)
    }

    fn features(&mut self, out: &mut Vec<Feature>) {
        while !self.at_section_or_end() {
            match self.feature() {
                Some(f) => out.push(f),
                None => self.recover_item(),
            }
        }
    }

    fn feature(&mut self) -> Option<Feature> {
        let (name, at) = self.item_head()?;
        let direction = if self.eat_keyword("in") {
            if self.eat_keyword("out") {
                PortDirection::InOut
            } else {
                PortDirection::In
            }
        } else if self.eat_keyword("out") {
            PortDirection::Out
        } else {
            let t = self.peek().clone();
            let message = match &t.tok {
                Tok::Ident(w) => format!("unsupported construct: feature `{name}` of kind `{w}`"),
                other => format!("expected a port direction, found {}", describe(other)),
            };
            self.error(t.at, message);
            return None;
        };
        let kind = if self.eat_keyword("event") {
            if self.eat_keyword("data") {
                PortKind::EventData
            } else {
                PortKind::Event
            }
        } else if self.eat_keyword("data") {
            PortKind::Data
        } else {
            let t = self.peek().clone();
            self.error(t.at, format!("expected `event`, `data` or `event data`, found {}", describe(&t.tok)));
            return None;
        };
        if !self.eat_keyword("port") {
            let t = self.peek().clone();
            self.error(t.at, format!("expected `port`, found {}", describe(&t.tok)));
            return None;
        }
        if matches!(self.peek().tok, Tok::Ident(_)) {
            self.classifier_ref()?;
        }
        self.expect(Tok::Semi, "`;`")?;
        Some(Feature { name, direction, kind, at })
    }

    /// `[pkg::]Type[.impl]`, returning the type name.
    fn classifier_ref(&mut self) -> Option<String> {
        let (mut ty, _) = self.ident("a classifier")?;
        while self.eat(&Tok::DoubleColon) {
            ty = self.ident("a classifier")?.0;
        }
        if self.eat(&Tok::Dot) {
            self.ident("an implementation name")?;
        }
        Some(ty)
    }

    fn subcomponents(&mut self, out: &mut Vec<Subcomponent>) {
        while !self.at_section_or_end() {
            match self.subcomponent() {
                Some(s) => out.push(s),
                None => self.recover_item(),
            }
        }
    }

    fn subcomponent(&mut self) -> Option<Subcomponent> {
        let (name, at) = self.item_head()?;
        let t = self.peek().clone();
        let category = match &t.tok {
            Tok::Ident(w) => match Category::from_keyword(w) {
                Some(c) => c,
                None => {
                    self.error(t.at, format!("unsupported construct: subcomponent `{name}` of category `{w}`"));
                    return None;
                }
            },
            other => {
                self.error(t.at, format!("expected a component category, found {}", describe(other)));
                return None;
            }
        };
        self.bump();
        let classifier = if matches!(self.peek().tok, Tok::Ident(_)) { Some(self.classifier_ref()?) } else { None };
        self.expect(Tok::Semi, "`;`")?;
        Some(Subcomponent { name, category, classifier, at })
    }

    fn connections(&mut self, out: &mut Vec<ConnectionDecl>) {
        while !self.at_section_or_end() {
            match self.connection() {
                Some(c) => out.push(c),
                None => self.recover_item(),
            }
        }
    }

    fn connection(&mut self) -> Option<ConnectionDecl> {
        let (name, at) = self.item_head()?;
        if self.peek().is_keyword("port") {
            self.bump();
        } else if let Tok::Ident(w) = &self.peek().tok {
            if ["feature", "parameter", "access", "bus", "data"].iter().any(|k| w.eq_ignore_ascii_case(k)) {
                let w = w.clone();
                let at = self.peek().at;
                self.error(at, format!("unsupported construct: `{w}` connection `{name}`"));
                return None;
            }
        }
        let from = self.port_ref()?;
        let bidirectional = match self.peek().tok {
            Tok::Arrow => false,
            Tok::BiArrow => true,
            ref other => {
                let (other, at) = (describe(other), self.peek().at);
                self.error(at, format!("expected `->` or `<->`, found {other}"));
                return None;
            }
        };
        self.bump();
        let to = self.port_ref()?;
        self.expect(Tok::Semi, "`;`")?;
        Some(ConnectionDecl { name, from, to, bidirectional, at })
    }

    fn port_ref(&mut self) -> Option<PortRef> {
        let (first, at) = self.ident("a port reference")?;
        if self.eat(&Tok::Dot) {
            let (port, _) = self.ident("a port name")?;
            Some(PortRef { component: Some(first), port, at })
        } else {
            Some(PortRef { component: None, port: first, at })
        }
    }
}

fn is_unsupported_category(word: &str) -> bool {
    ["bus", "memory", "processor", "abstract", "virtual", "feature", "annex"]
        .iter()
        .any(|k| word.eq_ignore_ascii_case(k))
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Colon => "`:`".into(),
        Tok::DoubleColon => "`::`".into(),
        Tok::Semi => "`;`".into(),
        Tok::Dot => "`.`".into(),
        Tok::Arrow => "`->`".into(),
        Tok::BiArrow => "`<->`".into(),
        Tok::Comma => "`,`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Other(c) => format!("`{c}`"),
        Tok::Annex => "an annex block".into(),
        Tok::Eof => "end of input".into(),
    }
}
