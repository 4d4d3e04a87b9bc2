//! Parser and printer for the supported test-script dialect.
//!
//! The grammar covers one test method per file: `onView(...)` statements
//! with the matchers `withText` / `withContentDescription` / `withId`, the
//! flat combinator `allOf`, the actions `click` / `typeText` /
//! `replaceText` / `closeSoftKeyboard`, and the check
//! `matches(isDisplayed())`. A pre-pass fuses
//! `ViewInteraction x = onView(...);` bindings with the statements that use
//! `x`, so recorded two-line interactions parse as single events.
//!
//! `typeText` and `replaceText` both normalize to an input event; the
//! distinction is keyboard behavior, which the simulated driver does not
//! model. `closeSoftKeyboard()` calls are consumed as no-ops.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gui::{Criterion, CriterionName, SearchType, Selector};

/// 1-based line range a parsed item came from. Metadata only: two events
/// that differ solely in origin compare equal.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineSpan {
    pub start: usize,
    pub end: usize,
}

/// The action part of a GUI event.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventAction {
    Click,
    Input(String),
}

/// One `onView(...).perform(...)` statement in notation form.
#[derive(Clone, Debug, Eq, Serialize, Deserialize)]
pub struct ParsedEvent {
    pub selector: Selector,
    pub action: EventAction,
    #[serde(default)]
    pub origin: LineSpan,
}

impl PartialEq for ParsedEvent {
    fn eq(&self, other: &Self) -> bool {
        self.selector == other.selector && self.action == other.action
    }
}

/// The only supported check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssertionCheck {
    IsDisplayed,
}

/// One `onView(...).check(matches(isDisplayed()))` statement.
#[derive(Clone, Debug, Eq, Serialize, Deserialize)]
pub struct ParsedAssertion {
    pub selector: Selector,
    pub check: AssertionCheck,
    #[serde(default)]
    pub origin: LineSpan,
}

impl PartialEq for ParsedAssertion {
    fn eq(&self, other: &Self) -> bool {
        self.selector == other.selector && self.check == other.check
    }
}

/// A whole parsed test method: events in source order, then assertions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub name: String,
    pub events: Vec<ParsedEvent>,
    pub assertions: Vec<ParsedAssertion>,
}

impl TestCase {
    /// A test case without assertions is representable but cannot prove
    /// anything about task completion; callers surface this as a warning.
    pub fn has_assertions(&self) -> bool {
        !self.assertions.is_empty()
    }

    /// Checks printability: every selector has valid arity and every
    /// `with_id` value is a dot-separated identifier that does not carry
    /// the source-syntax `R.id.` prefix (the parser strips that prefix, so
    /// values containing it would not survive a print/parse round trip).
    pub fn validate(&self) -> Result<(), String> {
        let selectors = self
            .events
            .iter()
            .map(|e| &e.selector)
            .chain(self.assertions.iter().map(|a| &a.selector));
        for selector in selectors {
            selector.validate().map_err(|e| e.to_string())?;
            for criterion in &selector.criteria {
                if criterion.name == CriterionName::WithId && !printable_id(&criterion.value) {
                    return Err(format!(
                        "with_id value {:?} is not printable as an identifier",
                        criterion.value
                    ));
                }
            }
        }
        Ok(())
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn printable_id(value: &str) -> bool {
    !value.starts_with("R.id.") && !value.is_empty() && value.split('.').all(is_ident)
}

/// Parse failure, always anchored to a source line.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: unsupported API `{name}`")]
    UnsupportedApi { name: String, line: usize },
    #[error("line {line}: {message}")]
    Syntax { message: String, line: usize },
}

impl ParseError {
    pub fn line(&self) -> usize {
        match self {
            ParseError::UnsupportedApi { line, .. } | ParseError::Syntax { line, .. } => *line,
        }
    }

    fn syntax(line: usize, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            message: message.into(),
            line,
        }
    }
}

// ---------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
enum TokenKind {
    Ident(String),
    Str(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Dot,
    Assign,
}

#[derive(Clone, Debug)]
struct Token {
    kind: TokenKind,
    line: usize,
}

fn lex(source: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let mut chars = source.chars().peekable();
    let mut line = 1usize;
    while let Some(&c) = chars.peek() {
        match c {
            '\n' => {
                line += 1;
                chars.next();
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            '(' | ')' | '{' | '}' | ',' | ';' | '.' | '=' => {
                chars.next();
                let kind = match c {
                    '(' => TokenKind::LParen,
                    ')' => TokenKind::RParen,
                    '{' => TokenKind::LBrace,
                    '}' => TokenKind::RBrace,
                    ',' => TokenKind::Comma,
                    ';' => TokenKind::Semi,
                    '.' => TokenKind::Dot,
                    _ => TokenKind::Assign,
                };
                tokens.push(Token { kind, line });
            }
            '"' => {
                chars.next();
                let start_line = line;
                let mut value = String::new();
                loop {
                    match chars.next() {
                        None => {
                            return Err(ParseError::syntax(start_line, "unterminated string"))
                        }
                        Some('"') => break,
                        Some('\\') => match chars.next() {
                            Some('"') => value.push('"'),
                            Some('\\') => value.push('\\'),
                            Some('n') => value.push('\n'),
                            Some('t') => value.push('\t'),
                            Some('r') => value.push('\r'),
                            Some(other) => {
                                return Err(ParseError::syntax(
                                    start_line,
                                    format!("unknown escape sequence \\{other}"),
                                ))
                            }
                            None => {
                                return Err(ParseError::syntax(start_line, "unterminated string"))
                            }
                        },
                        Some('\n') => {
                            return Err(ParseError::syntax(
                                start_line,
                                "newline inside string literal",
                            ))
                        }
                        Some(other) => value.push(other),
                    }
                }
                tokens.push(Token {
                    kind: TokenKind::Str(value),
                    line: start_line,
                });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut ident = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        ident.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                tokens.push(Token {
                    kind: TokenKind::Ident(ident),
                    line,
                });
            }
            other => {
                return Err(ParseError::syntax(
                    line,
                    format!("unexpected character `{other}`"),
                ))
            }
        }
    }
    Ok(tokens)
}

// ---------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&TokenKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn line(&self) -> usize {
        self.tokens
            .get(self.pos)
            .or_else(|| self.tokens.last())
            .map_or(1, |t| t.line)
    }

    fn next(&mut self) -> Option<&Token> {
        let token = self.tokens.get(self.pos);
        if token.is_some() {
            self.pos += 1;
        }
        token
    }

    fn expect(&mut self, kind: &TokenKind, what: &str) -> Result<usize, ParseError> {
        let line = self.line();
        match self.next() {
            Some(token) if &token.kind == kind => Ok(token.line),
            Some(token) => Err(ParseError::syntax(
                token.line,
                format!("expected {what}, found {:?}", token.kind),
            )),
            None => Err(ParseError::syntax(line, format!("expected {what}, found end of input"))),
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, usize), ParseError> {
        let line = self.line();
        match self.next() {
            Some(Token {
                kind: TokenKind::Ident(name),
                line,
            }) => Ok((name.clone(), *line)),
            Some(token) => Err(ParseError::syntax(
                token.line,
                format!("expected {what}, found {:?}", token.kind),
            )),
            None => Err(ParseError::syntax(line, format!("expected {what}, found end of input"))),
        }
    }

    fn expect_keyword(&mut self, keyword: &str) -> Result<usize, ParseError> {
        let (name, line) = self.expect_ident(&format!("`{keyword}`"))?;
        if name == keyword {
            Ok(line)
        } else {
            Err(ParseError::syntax(
                line,
                format!("expected `{keyword}`, found `{name}`"),
            ))
        }
    }

    fn expect_string(&mut self, what: &str) -> Result<(String, usize), ParseError> {
        let line = self.line();
        match self.next() {
            Some(Token {
                kind: TokenKind::Str(value),
                line,
            }) => Ok((value.clone(), *line)),
            Some(token) => Err(ParseError::syntax(
                token.line,
                format!("expected {what}, found {:?}", token.kind),
            )),
            None => Err(ParseError::syntax(line, format!("expected {what}, found end of input"))),
        }
    }

    /// `ident ("." ident)*` joined back with dots.
    fn dotted_ident(&mut self) -> Result<(String, usize), ParseError> {
        let (mut name, line) = self.expect_ident("identifier")?;
        while self.peek() == Some(&TokenKind::Dot) {
            self.next();
            let (part, _) = self.expect_ident("identifier after `.`")?;
            name.push('.');
            name.push_str(&part);
        }
        Ok((name, line))
    }
}

/// What one statement contributed.
enum Statement {
    Binding { name: String, selector: Selector, line: usize },
    Event(ParsedEvent),
    Assertion(ParsedAssertion),
    /// A perform that only closed the keyboard.
    Nothing,
}

/// Parse one test method in the supported dialect.
pub fn parse_script(source: &str) -> Result<TestCase, ParseError> {
    let tokens = lex(source)?;
    let mut p = Parser { tokens, pos: 0 };

    p.expect_keyword("public")?;
    p.expect_keyword("void")?;
    let (name, _) = p.expect_ident("method name")?;
    p.expect(&TokenKind::LParen, "`(`")?;
    p.expect(&TokenKind::RParen, "`)`")?;
    p.expect(&TokenKind::LBrace, "`{`")?;

    let mut bindings: Vec<(String, Selector, usize)> = Vec::new();
    let mut events = Vec::new();
    let mut assertions: Vec<ParsedAssertion> = Vec::new();

    loop {
        match p.peek() {
            Some(TokenKind::RBrace) => {
                p.next();
                break;
            }
            Some(_) => {}
            None => return Err(ParseError::syntax(p.line(), "expected `}`, found end of input")),
        }
        match parse_statement(&mut p, &bindings)? {
            Statement::Binding { name, selector, line } => {
                bindings.push((name, selector, line));
            }
            Statement::Event(event) => {
                if let Some(assertion) = assertions.first() {
                    return Err(ParseError::syntax(
                        event.origin.start,
                        format!(
                            "event statement after the assertion on line {}",
                            assertion.origin.start
                        ),
                    ));
                }
                events.push(event);
            }
            Statement::Assertion(assertion) => assertions.push(assertion),
            Statement::Nothing => {}
        }
    }
    if let Some(token) = p.next() {
        return Err(ParseError::syntax(
            token.line,
            format!("unexpected {:?} after method body", token.kind),
        ));
    }

    Ok(TestCase {
        name,
        events,
        assertions,
    })
}

fn parse_statement(
    p: &mut Parser,
    bindings: &[(String, Selector, usize)],
) -> Result<Statement, ParseError> {
    let (head, head_line) = p.expect_ident("statement")?;

    if head == "ViewInteraction" {
        let (name, _) = p.expect_ident("binding name")?;
        p.expect(&TokenKind::Assign, "`=`")?;
        p.expect_keyword("onView")?;
        p.expect(&TokenKind::LParen, "`(`")?;
        let selector = parse_matcher(p)?;
        p.expect(&TokenKind::RParen, "`)`")?;
        p.expect(&TokenKind::Semi, "`;`")?;
        return Ok(Statement::Binding {
            name,
            selector,
            line: head_line,
        });
    }

    // Receiver: `onView(matcher)` or a previously bound variable.
    let (selector, origin_start) = if head == "onView" {
        p.expect(&TokenKind::LParen, "`(`")?;
        let selector = parse_matcher(p)?;
        p.expect(&TokenKind::RParen, "`)`")?;
        (selector, head_line)
    } else if let Some((_, selector, line)) = bindings.iter().rev().find(|(n, _, _)| *n == head) {
        (selector.clone(), *line)
    } else {
        return Err(ParseError::syntax(
            head_line,
            format!("unknown receiver `{head}`"),
        ));
    };

    p.expect(&TokenKind::Dot, "`.`")?;
    let (method, method_line) = p.expect_ident("`perform` or `check`")?;
    match method.as_str() {
        "perform" => {
            p.expect(&TokenKind::LParen, "`(`")?;
            let mut action = None;
            loop {
                if let Some(parsed) = parse_action(p)? {
                    if action.is_some() {
                        return Err(ParseError::syntax(
                            method_line,
                            "more than one action in a single perform",
                        ));
                    }
                    action = Some(parsed);
                }
                match p.peek() {
                    Some(TokenKind::Comma) => {
                        p.next();
                    }
                    _ => break,
                }
            }
            p.expect(&TokenKind::RParen, "`)`")?;
            let end = p.expect(&TokenKind::Semi, "`;`")?;
            match action {
                Some(action) => Ok(Statement::Event(ParsedEvent {
                    selector,
                    action,
                    origin: LineSpan {
                        start: origin_start,
                        end,
                    },
                })),
                None => Ok(Statement::Nothing),
            }
        }
        "check" => {
            p.expect(&TokenKind::LParen, "`(`")?;
            let (inner, inner_line) = p.expect_ident("`matches`")?;
            if inner != "matches" {
                return Err(ParseError::UnsupportedApi {
                    name: inner,
                    line: inner_line,
                });
            }
            p.expect(&TokenKind::LParen, "`(`")?;
            let (check, check_line) = p.expect_ident("`isDisplayed`")?;
            if check != "isDisplayed" {
                return Err(ParseError::UnsupportedApi {
                    name: check,
                    line: check_line,
                });
            }
            p.expect(&TokenKind::LParen, "`(`")?;
            p.expect(&TokenKind::RParen, "`)`")?;
            p.expect(&TokenKind::RParen, "`)`")?;
            p.expect(&TokenKind::RParen, "`)`")?;
            let end = p.expect(&TokenKind::Semi, "`;`")?;
            Ok(Statement::Assertion(ParsedAssertion {
                selector,
                check: AssertionCheck::IsDisplayed,
                origin: LineSpan {
                    start: origin_start,
                    end,
                },
            }))
        }
        other => Err(ParseError::UnsupportedApi {
            name: other.to_string(),
            line: method_line,
        }),
    }
}

/// One action inside `perform(...)`. `closeSoftKeyboard` yields `None`.
fn parse_action(p: &mut Parser) -> Result<Option<EventAction>, ParseError> {
    let (name, line) = p.expect_ident("action")?;
    match name.as_str() {
        "click" => {
            p.expect(&TokenKind::LParen, "`(`")?;
            p.expect(&TokenKind::RParen, "`)`")?;
            Ok(Some(EventAction::Click))
        }
        "typeText" | "replaceText" => {
            p.expect(&TokenKind::LParen, "`(`")?;
            let (value, _) = p.expect_string("string argument")?;
            p.expect(&TokenKind::RParen, "`)`")?;
            Ok(Some(EventAction::Input(value)))
        }
        "closeSoftKeyboard" => {
            p.expect(&TokenKind::LParen, "`(`")?;
            p.expect(&TokenKind::RParen, "`)`")?;
            Ok(None)
        }
        other => Err(ParseError::UnsupportedApi {
            name: other.to_string(),
            line,
        }),
    }
}

fn parse_matcher(p: &mut Parser) -> Result<Selector, ParseError> {
    let (name, line) = p.expect_ident("matcher")?;
    if name == "allOf" {
        p.expect(&TokenKind::LParen, "`(`")?;
        let mut criteria = vec![parse_criterion(p)?];
        while p.peek() == Some(&TokenKind::Comma) {
            p.next();
            criteria.push(parse_criterion(p)?);
        }
        p.expect(&TokenKind::RParen, "`)`")?;
        if criteria.len() < 2 {
            return Err(ParseError::syntax(line, "allOf needs at least two matchers"));
        }
        Ok(Selector::all_of(criteria))
    } else {
        let criterion = parse_criterion_named(p, name, line)?;
        Ok(Selector {
            search_type: SearchType::Single,
            criteria: vec![criterion],
        })
    }
}

fn parse_criterion(p: &mut Parser) -> Result<Criterion, ParseError> {
    let (name, line) = p.expect_ident("matcher")?;
    if name == "allOf" {
        // flat grammar only
        return Err(ParseError::UnsupportedApi { name, line });
    }
    parse_criterion_named(p, name, line)
}

fn parse_criterion_named(
    p: &mut Parser,
    name: String,
    line: usize,
) -> Result<Criterion, ParseError> {
    match name.as_str() {
        "withText" | "withContentDescription" => {
            p.expect(&TokenKind::LParen, "`(`")?;
            let (value, _) = p.expect_string("string argument")?;
            p.expect(&TokenKind::RParen, "`)`")?;
            let criterion_name = if name == "withText" {
                CriterionName::WithText
            } else {
                CriterionName::WithContentDescription
            };
            Ok(Criterion {
                name: criterion_name,
                value,
            })
        }
        "withId" => {
            p.expect(&TokenKind::LParen, "`(`")?;
            let (raw, _) = p.dotted_ident()?;
            p.expect(&TokenKind::RParen, "`)`")?;
            // `R.id.foo` is app-local resource syntax; the id itself is
            // `foo`. Qualified tokens like `android.R.id.text1` stay whole.
            let value = match raw.strip_prefix("R.id.") {
                Some(rest) if is_ident(rest) => rest.to_string(),
                _ => raw,
            };
            Ok(Criterion {
                name: CriterionName::WithId,
                value,
            })
        }
        other => Err(ParseError::UnsupportedApi {
            name: other.to_string(),
            line,
        }),
    }
}

// ---------------------------------------------------------------------
// Printer
// ---------------------------------------------------------------------

fn escape(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for c in value.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            other => out.push(other),
        }
    }
    out
}

fn print_criterion(criterion: &Criterion) -> String {
    match criterion.name {
        CriterionName::WithText => format!("withText(\"{}\")", escape(&criterion.value)),
        CriterionName::WithContentDescription => {
            format!("withContentDescription(\"{}\")", escape(&criterion.value))
        }
        CriterionName::WithId => {
            if criterion.value.contains('.') {
                format!("withId({})", criterion.value)
            } else {
                format!("withId(R.id.{})", criterion.value)
            }
        }
    }
}

fn print_matcher(selector: &Selector) -> String {
    match selector.search_type {
        SearchType::Single => print_criterion(&selector.criteria[0]),
        SearchType::AllOf => {
            let parts: Vec<String> = selector.criteria.iter().map(print_criterion).collect();
            format!("allOf({})", parts.join(", "))
        }
    }
}

/// Print the canonical one-statement-per-line source for a test case.
/// For well-formed cases (see [`TestCase::validate`]) this is a fixed
/// point: parsing the output yields an equal `TestCase`.
pub fn print_script(tc: &TestCase) -> String {
    let mut out = String::new();
    out.push_str(&format!("public void {}() {{\n", tc.name));
    for event in &tc.events {
        let action = match &event.action {
            EventAction::Click => "click()".to_string(),
            EventAction::Input(value) => format!("replaceText(\"{}\")", escape(value)),
        };
        out.push_str(&format!(
            "    onView({}).perform({});\n",
            print_matcher(&event.selector),
            action
        ));
    }
    for assertion in &tc.assertions {
        out.push_str(&format!(
            "    onView({}).check(matches(isDisplayed()));\n",
            print_matcher(&assertion.selector)
        ));
    }
    out.push_str("}\n");
    out
}
