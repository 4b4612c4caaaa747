use std::collections::{BTreeMap, BTreeSet};

use super::lexer::{tokenize, Tok, Token};
use super::{ParseError, ProtocolDocument, Span};
use crate::automaton::{Acceptance, Alphabet, IoAutomaton, Transition};
use crate::error::ModelError;
use crate::gif::{validate_labels, GifError};
use crate::protocol::{Channel, Protocol, TransitionRef};
use crate::symbol::{Character, Symbol};

#[derive(Clone, Debug)]
struct Ident {
    name: String,
    span: Span,
}

enum AcceptAst {
    Final(Vec<Ident>),
    Muller(Vec<Vec<Ident>>),
}

struct TransitionAst {
    from: Ident,
    input: Ident,
    output: Ident,
    to: Ident,
    label: Option<Ident>,
}

struct RoleAst {
    name: Ident,
    inputs: Option<Vec<Ident>>,
    outputs: Option<Vec<Ident>>,
    states: Option<(Span, Vec<Ident>)>,
    init: Option<(Span, Ident, Ident)>,
    accept: Option<(Span, AcceptAst)>,
    transitions: Vec<TransitionAst>,
}

struct ChannelAst {
    sender: Ident,
    receiver: Ident,
}

struct DocumentAst {
    name: Ident,
    roles: Vec<RoleAst>,
    channels: Vec<ChannelAst>,
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        &self.tokens[(self.pos + offset).min(self.tokens.len() - 1)].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        let t = self.peek();
        ParseError::at(t.span, format!("expected {expected}, found {}", t.tok.describe()))
    }

    fn expect(&mut self, tok: Tok) -> Result<Span, ParseError> {
        if self.peek().tok == tok {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&tok.describe()))
        }
    }

    fn ident(&mut self, what: &str) -> Result<Ident, ParseError> {
        match &self.peek().tok {
            Tok::Ident(name) => {
                let name = name.clone();
                let span = self.bump().span;
                Ok(Ident { name, span })
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<Span, ParseError> {
        match &self.peek().tok {
            Tok::Ident(name) if name == kw => Ok(self.bump().span),
            _ => Err(self.unexpected(&format!("`{kw}`"))),
        }
    }

    /// `{ a, b, c }` with an optional trailing comma.
    fn set(&mut self) -> Result<Vec<Ident>, ParseError> {
        self.expect(Tok::LBrace)?;
        let mut items = Vec::new();
        loop {
            if self.peek().tok == Tok::RBrace {
                self.bump();
                return Ok(items);
            }
            items.push(self.ident("a name or `}`")?);
            match self.peek().tok {
                Tok::Comma => {
                    self.bump();
                }
                Tok::RBrace => {}
                _ => return Err(self.unexpected("`,` or `}`")),
            }
        }
    }

    fn document(&mut self) -> Result<DocumentAst, ParseError> {
        if self.peek().tok == Tok::Eof {
            return Err(ParseError::at(Span { line: 1, column: 1 }, "no protocol declared"));
        }
        self.keyword("protocol")?;
        let name = self.ident("a protocol name")?;
        self.expect(Tok::LBrace)?;
        let mut roles = Vec::new();
        let mut channels = Vec::new();
        loop {
            match &self.peek().tok {
                Tok::RBrace => {
                    self.bump();
                    break;
                }
                Tok::Ident(kw) if kw == "role" => {
                    self.bump();
                    roles.push(self.role()?);
                }
                Tok::Ident(kw) if kw == "channel" => {
                    self.bump();
                    let sender = self.ident("a sending role")?;
                    self.expect(Tok::Arrow)?;
                    let receiver = self.ident("a receiving role")?;
                    channels.push(ChannelAst { sender, receiver });
                }
                _ => return Err(self.unexpected("`role`, `channel` or `}`")),
            }
        }
        if self.peek().tok != Tok::Eof {
            return Err(self.unexpected("end of input (one protocol per document)"));
        }
        Ok(DocumentAst { name, roles, channels })
    }

    fn role(&mut self) -> Result<RoleAst, ParseError> {
        let name = self.ident("a role name")?;
        self.expect(Tok::LBrace)?;
        let mut role = RoleAst {
            name,
            inputs: None,
            outputs: None,
            states: None,
            init: None,
            accept: None,
            transitions: Vec::new(),
        };
        loop {
            if self.peek().tok == Tok::RBrace {
                self.bump();
                return Ok(role);
            }
            if matches!(self.peek().tok, Tok::Ident(_)) && *self.peek_at(1) == Tok::Dash {
                role.transitions.push(self.transition()?);
                continue;
            }
            let kw = self.ident("a role section or a transition")?;
            let duplicate = |present: bool| {
                if present {
                    Err(ParseError::at(kw.span, format!("`{}` is declared twice", kw.name)))
                } else {
                    Ok(())
                }
            };
            match kw.name.as_str() {
                "inputs" => {
                    duplicate(role.inputs.is_some())?;
                    role.inputs = Some(self.set()?);
                }
                "outputs" => {
                    duplicate(role.outputs.is_some())?;
                    role.outputs = Some(self.set()?);
                }
                "states" => {
                    duplicate(role.states.is_some())?;
                    role.states = Some((kw.span, self.set()?));
                }
                "init" => {
                    duplicate(role.init.is_some())?;
                    let state = self.ident("an initial state")?;
                    self.expect(Tok::Slash)?;
                    let output = self.ident("an initial output or `eps`")?;
                    role.init = Some((kw.span, state, output));
                }
                "accept" => {
                    duplicate(role.accept.is_some())?;
                    let acc = match &self.peek().tok {
                        Tok::Ident(k) if k == "final" => {
                            self.bump();
                            AcceptAst::Final(self.set()?)
                        }
                        Tok::Ident(k) if k == "muller" => {
                            self.bump();
                            self.expect(Tok::LBrace)?;
                            let mut family = Vec::new();
                            loop {
                                match self.peek().tok {
                                    Tok::RBrace => {
                                        self.bump();
                                        break;
                                    }
                                    Tok::LBrace => family.push(self.set()?),
                                    _ => return Err(self.unexpected("`{` or `}`")),
                                }
                                match self.peek().tok {
                                    Tok::Comma => {
                                        self.bump();
                                    }
                                    Tok::RBrace => {}
                                    _ => return Err(self.unexpected("`,` or `}`")),
                                }
                            }
                            AcceptAst::Muller(family)
                        }
                        _ => return Err(self.unexpected("`final` or `muller`")),
                    };
                    role.accept = Some((kw.span, acc));
                }
                _ => {
                    return Err(ParseError::at(
                        kw.span,
                        format!(
                            "expected `inputs`, `outputs`, `states`, `init`, `accept` or a transition, found `{}`",
                            kw.name
                        ),
                    ))
                }
            }
        }
    }

    fn transition(&mut self) -> Result<TransitionAst, ParseError> {
        let from = self.ident("a source state")?;
        self.expect(Tok::Dash)?;
        let input = self.ident("an input or `eps`")?;
        self.expect(Tok::Slash)?;
        let output = self.ident("an output or `eps`")?;
        self.expect(Tok::LongArrow)?;
        let to = self.ident("a target state")?;
        let label = if self.peek().tok == Tok::At {
            self.bump();
            self.keyword("decision")?;
            Some(self.ident("a decision name")?)
        } else {
            None
        };
        Ok(TransitionAst {
            from,
            input,
            output,
            to,
            label,
        })
    }
}

fn symbol(id: &Ident) -> Result<Symbol, ParseError> {
    Symbol::new(&id.name).map_err(|e| ParseError::at(id.span, e.to_string()))
}

fn character(id: &Ident) -> Result<Character, ParseError> {
    Character::parse(&id.name).map_err(|e| ParseError::at(id.span, e.to_string()))
}

/// Symbols of a set, rejecting repeated elements at their second occurrence.
fn symbol_set(items: &[Ident]) -> Result<BTreeSet<Symbol>, ParseError> {
    let mut out = BTreeSet::new();
    for id in items {
        if !out.insert(symbol(id)?) {
            return Err(ParseError::at(id.span, format!("`{}` is listed twice", id.name)));
        }
    }
    Ok(out)
}

impl RoleAst {
    fn idents(&self) -> impl Iterator<Item = &Ident> {
        let transitions = self
            .transitions
            .iter()
            .flat_map(|t| [&t.from, &t.input, &t.output, &t.to]);
        let init = self.init.iter().flat_map(|(_, s, o)| [s, o]);
        let accept = self.accept.iter().flat_map(|(_, a)| -> Box<dyn Iterator<Item = &Ident>> {
            match a {
                AcceptAst::Final(s) => Box::new(s.iter()),
                AcceptAst::Muller(f) => Box::new(f.iter().flatten()),
            }
        });
        let sets = self
            .states
            .iter()
            .flat_map(|(_, s)| s.iter())
            .chain(self.inputs.iter().flatten())
            .chain(self.outputs.iter().flatten());
        transitions.chain(init).chain(accept).chain(sets)
    }

    /// Best source location for a construction error of this role.
    fn locate(&self, e: &ModelError) -> Span {
        let by_name = |name: &str, last: bool| {
            let mut it = self.idents().filter(|i| i.name == name);
            if last {
                it.last().map(|i| i.span)
            } else {
                it.next().map(|i| i.span)
            }
        };
        let found = match e {
            ModelError::UnknownState(n) | ModelError::UnknownInput(n) | ModelError::UnknownOutput(n) => by_name(n, false),
            ModelError::Duplicate(n) | ModelError::AlphabetOverlap { name: n, .. } => by_name(n, true),
            ModelError::NoStates => self.states.as_ref().map(|(s, _)| *s),
            _ => None,
        };
        found.unwrap_or(self.name.span)
    }

    fn build(&self) -> Result<(IoAutomaton, Vec<(Transition, Ident)>), ParseError> {
        let missing = |what: &str| ParseError::at(self.name.span, format!("role {} has no `{what}` declaration", self.name.name));
        let (_, states) = self.states.as_ref().ok_or_else(|| missing("states"))?;
        let (_, init_state, init_output) = self.init.as_ref().ok_or_else(|| missing("init"))?;
        let (_, accept) = self.accept.as_ref().ok_or_else(|| missing("accept"))?;
        let alphabet = |items: &Option<Vec<Ident>>| -> Result<Alphabet, ParseError> {
            let set = symbol_set(items.as_deref().unwrap_or(&[]))?;
            Ok(Alphabet::from_symbols(set).expect("sets are deduplicated"))
        };
        let inputs = alphabet(&self.inputs)?;
        let outputs = alphabet(&self.outputs)?;
        let states = Alphabet::from_symbols(symbol_set(states)?).expect("sets are deduplicated");
        let acceptance = match accept {
            AcceptAst::Final(s) => Acceptance::FiniteFinal(symbol_set(s)?),
            AcceptAst::Muller(f) => {
                let mut family = BTreeSet::new();
                for s in f {
                    family.insert(symbol_set(s)?);
                }
                Acceptance::Muller(family)
            }
        };
        let mut transitions = Vec::new();
        let mut labelled = Vec::new();
        let mut seen = BTreeSet::new();
        for t in &self.transitions {
            let tr = Transition::new(symbol(&t.from)?, character(&t.input)?, character(&t.output)?, symbol(&t.to)?);
            if !seen.insert(tr.clone()) {
                return Err(ParseError::at(t.from.span, format!("transition {tr} is declared twice")));
            }
            if let Some(l) = &t.label {
                labelled.push((tr.clone(), l.clone()));
            }
            transitions.push(tr);
        }
        let a = IoAutomaton::new(
            inputs,
            outputs,
            states,
            (symbol(init_state)?, character(init_output)?),
            transitions,
            acceptance,
        )
        .map_err(|e| ParseError::at(self.locate(&e), format!("role {}: {e}", self.name.name)))?;
        Ok((a, labelled))
    }
}

impl DocumentAst {
    fn locate(&self, e: &ModelError) -> Span {
        let channel = |sender: &str, receiver: Option<&str>, last: bool| {
            let mut it = self
                .channels
                .iter()
                .filter(|c| c.sender.name == sender && receiver.is_none_or(|r| c.receiver.name == r));
            let c = if last { it.next_back() } else { it.next() };
            c.map(|c| c.sender.span)
        };
        let role = |name: &str| self.roles.iter().find(|r| r.name.name == name);
        let found = match e {
            ModelError::UnknownRole(n) => self
                .channels
                .iter()
                .flat_map(|c| [&c.sender, &c.receiver])
                .find(|i| &i.name == n)
                .map(|i| i.span),
            ModelError::SelfChannel(n) => channel(n, Some(n), false),
            ModelError::UnroutableChannel { sender, receiver } => channel(sender, Some(receiver), false),
            ModelError::DuplicateChannel { sender, receiver } => channel(sender, Some(receiver), true),
            ModelError::AmbiguousRoute { sender, second, .. } => channel(sender, Some(second), false),
            ModelError::MixedAcceptance { muller, .. } => role(muller).and_then(|r| r.accept.as_ref().map(|(s, _)| *s)),
            ModelError::MultipleInitialOutputs { second, .. } => role(second).and_then(|r| r.init.as_ref().map(|(s, _, _)| *s)),
            _ => None,
        };
        found.unwrap_or(self.name.span)
    }

    fn build(&self) -> Result<ProtocolDocument, ParseError> {
        let name = symbol(&self.name)?;
        let mut roles = Vec::new();
        let mut label_spans: BTreeMap<String, Span> = BTreeMap::new();
        let mut labels = BTreeMap::new();
        let mut seen_roles = BTreeSet::new();
        for r in &self.roles {
            let id = symbol(&r.name)?;
            if !seen_roles.insert(id.clone()) {
                return Err(ParseError::at(r.name.span, format!("role {id} is declared twice")));
            }
            let (a, labelled) = r.build()?;
            for (t, l) in labelled {
                if let Some(first) = label_spans.get(&l.name) {
                    return Err(ParseError::at(
                        l.span,
                        format!("decision label `{}` is already used at {first}", l.name),
                    ));
                }
                label_spans.insert(l.name.clone(), l.span);
                labels.insert(TransitionRef::new(id.clone(), t), symbol(&l)?);
            }
            roles.push((id, a));
        }
        if roles.is_empty() {
            return Err(ParseError::at(self.name.span, format!("protocol {name} declares no roles")));
        }
        let mut channels = Vec::new();
        for c in &self.channels {
            channels.push(Channel::new(symbol(&c.sender)?, symbol(&c.receiver)?));
        }
        let protocol = Protocol::new(roles, channels).map_err(|e| ParseError::at(self.locate(&e), e.to_string()))?;
        validate_labels(&protocol, &labels).map_err(|e| {
            let label = match &e {
                GifError::UnknownTransition { label, .. }
                | GifError::NeedlessLabel { label, .. }
                | GifError::NamingConflict { label, .. } => Some(label.as_str()),
                _ => None,
            };
            let span = label.and_then(|l| label_spans.get(l)).copied().unwrap_or(self.name.span);
            ParseError::at(span, e.to_string())
        })?;
        Ok(ProtocolDocument { name, protocol, labels })
    }
}

pub(crate) fn parse_str(text: &str) -> Result<ProtocolDocument, ParseError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser { tokens, pos: 0 };
    parser.document()?.build()
}
