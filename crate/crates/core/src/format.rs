//! Line-oriented text formats for games (`.bwg`) and strategies (`.bws`):
//! parsing with located errors and canonical serialization.
//!
//! Serialization is canonical — states sorted by name, probabilities
//! rendered as exact decimals or reduced fractions — so parsing a
//! serialized value reproduces it structurally.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use crate::game::{
    BehavioralStrategy, GameKind, GameSpec, ModelError, MoveAlphabets, PayoffAutomaton, Player,
    Position, StateLabel, StrategyAutomaton, StrategyBody,
};
use crate::rational::{format_q, parse_decimal, q, Q};

/// Parse failure with a 1-based source location.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, col: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            col,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}, col {}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Num(Q),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Colon,
    Eq,
    Arrow,
    Slash,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Str(s) => format!("string \"{s}\""),
            Tok::Num(v) => format!("number {}", format_q(v)),
            Tok::LBrace => "'{'".into(),
            Tok::RBrace => "'}'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::LBracket => "'['".into(),
            Tok::RBracket => "']'".into(),
            Tok::Comma => "','".into(),
            Tok::Semi => "';'".into(),
            Tok::Colon => "':'".into(),
            Tok::Eq => "'='".into(),
            Tok::Arrow => "'->'".into(),
            Tok::Slash => "'/'".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct SpTok {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<SpTok>, ParseError> {
    let chars: Vec<char> = text.chars().filter(|&c| c != '\r').collect();
    let mut toks = Vec::new();
    let mut i = 0usize;
    let mut line = 1usize;
    let mut col = 1usize;

    let is_ident_start = |c: char| c.is_ascii_alphabetic() || c == '_';
    let is_ident_char = |c: char| c.is_ascii_alphanumeric() || c == '_';

    while i < chars.len() {
        let c = chars[i];
        let (tline, tcol) = (line, col);
        let advance = |i: &mut usize, line: &mut usize, col: &mut usize| {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        };
        match c {
            ' ' | '\t' | '\n' => {
                advance(&mut i, &mut line, &mut col);
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    advance(&mut i, &mut line, &mut col);
                }
            }
            '"' => {
                advance(&mut i, &mut line, &mut col);
                let mut s = String::new();
                loop {
                    if i >= chars.len() || chars[i] == '\n' {
                        return Err(ParseError::new(tline, tcol, "unterminated string"));
                    }
                    if chars[i] == '"' {
                        advance(&mut i, &mut line, &mut col);
                        break;
                    }
                    s.push(chars[i]);
                    advance(&mut i, &mut line, &mut col);
                }
                toks.push(SpTok {
                    tok: Tok::Str(s),
                    line: tline,
                    col: tcol,
                });
            }
            '{' | '}' | '(' | ')' | '[' | ']' | ',' | ';' | ':' | '=' | '/' => {
                let tok = match c {
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    ',' => Tok::Comma,
                    ';' => Tok::Semi,
                    ':' => Tok::Colon,
                    '=' => Tok::Eq,
                    _ => Tok::Slash,
                };
                toks.push(SpTok {
                    tok,
                    line: tline,
                    col: tcol,
                });
                advance(&mut i, &mut line, &mut col);
            }
            '-' => {
                if i + 1 < chars.len() && chars[i + 1] == '>' {
                    advance(&mut i, &mut line, &mut col);
                    advance(&mut i, &mut line, &mut col);
                    toks.push(SpTok {
                        tok: Tok::Arrow,
                        line: tline,
                        col: tcol,
                    });
                } else if i + 1 < chars.len() && chars[i + 1].is_ascii_digit() {
                    let mut s = String::from("-");
                    advance(&mut i, &mut line, &mut col);
                    while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                        s.push(chars[i]);
                        advance(&mut i, &mut line, &mut col);
                    }
                    let v = parse_decimal(&s).ok_or_else(|| {
                        ParseError::new(tline, tcol, format!("bad number literal '{s}'"))
                    })?;
                    toks.push(SpTok {
                        tok: Tok::Num(v),
                        line: tline,
                        col: tcol,
                    });
                } else {
                    return Err(ParseError::new(tline, tcol, "stray '-'"));
                }
            }
            c if c.is_ascii_digit() => {
                let mut s = String::new();
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    s.push(chars[i]);
                    advance(&mut i, &mut line, &mut col);
                }
                let v = parse_decimal(&s).ok_or_else(|| {
                    ParseError::new(tline, tcol, format!("bad number literal '{s}'"))
                })?;
                toks.push(SpTok {
                    tok: Tok::Num(v),
                    line: tline,
                    col: tcol,
                });
            }
            c if is_ident_start(c) => {
                let mut s = String::new();
                while i < chars.len() {
                    let ch = chars[i];
                    if is_ident_char(ch) {
                        s.push(ch);
                        advance(&mut i, &mut line, &mut col);
                    } else if ch == '-' && i + 1 < chars.len() && is_ident_char(chars[i + 1]) {
                        s.push('-');
                        advance(&mut i, &mut line, &mut col);
                    } else {
                        break;
                    }
                }
                toks.push(SpTok {
                    tok: Tok::Ident(s),
                    line: tline,
                    col: tcol,
                });
            }
            other => {
                return Err(ParseError::new(
                    tline,
                    tcol,
                    format!("unexpected character '{other}'"),
                ));
            }
        }
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<SpTok>,
    pos: usize,
    end_line: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Self, ParseError> {
        let toks = lex(text)?;
        let end_line = text.lines().count().max(1);
        Ok(Parser {
            toks,
            pos: 0,
            end_line,
        })
    }

    fn peek(&self) -> Option<&SpTok> {
        self.toks.get(self.pos)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn here(&self) -> (usize, usize) {
        match self.peek() {
            Some(t) => (t.line, t.col),
            None => (self.end_line, 1),
        }
    }

    fn error_here(&self, message: impl Into<String>) -> ParseError {
        let (line, col) = self.here();
        ParseError::new(line, col, message)
    }

    fn next(&mut self, what: &str) -> Result<SpTok, ParseError> {
        let t = self
            .peek()
            .cloned()
            .ok_or_else(|| self.error_here(format!("expected {what}, found end of input")))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<SpTok, ParseError> {
        let t = self.next(what)?;
        if t.tok == tok {
            Ok(t)
        } else {
            Err(ParseError::new(
                t.line,
                t.col,
                format!("expected {what}, found {}", t.tok.describe()),
            ))
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, usize, usize), ParseError> {
        let t = self.next(what)?;
        match t.tok {
            Tok::Ident(s) => Ok((s, t.line, t.col)),
            other => Err(ParseError::new(
                t.line,
                t.col,
                format!("expected {what}, found {}", other.describe()),
            )),
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(usize, usize), ParseError> {
        let (word, line, col) = self.expect_ident(&format!("keyword '{kw}'"))?;
        if word == kw {
            Ok((line, col))
        } else {
            Err(ParseError::new(
                line,
                col,
                format!("expected keyword '{kw}', found '{word}'"),
            ))
        }
    }

    fn peek_ident(&self) -> Option<&str> {
        match self.peek() {
            Some(SpTok {
                tok: Tok::Ident(s), ..
            }) => Some(s),
            _ => None,
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if let Some(t) = self.peek() {
            if &t.tok == tok {
                self.pos += 1;
                return true;
            }
        }
        false
    }

    fn expect_str(&mut self, what: &str) -> Result<(String, usize, usize), ParseError> {
        let t = self.next(what)?;
        match t.tok {
            Tok::Str(s) => Ok((s, t.line, t.col)),
            other => Err(ParseError::new(
                t.line,
                t.col,
                format!("expected {what}, found {}", other.describe()),
            )),
        }
    }

    /// A number literal, optionally a fraction `a/b`.
    fn expect_number(&mut self, what: &str) -> Result<(Q, usize, usize), ParseError> {
        let t = self.next(what)?;
        let (numer, line, col) = match t.tok {
            Tok::Num(v) => (v, t.line, t.col),
            other => {
                return Err(ParseError::new(
                    t.line,
                    t.col,
                    format!("expected {what}, found {}", other.describe()),
                ))
            }
        };
        if matches!(self.peek().map(|t| &t.tok), Some(Tok::Slash)) {
            self.pos += 1;
            let d = self.next("denominator")?;
            match d.tok {
                Tok::Num(denom) => {
                    if denom.is_zero() {
                        return Err(ParseError::new(d.line, d.col, "division by zero"));
                    }
                    Ok((numer / denom, line, col))
                }
                other => Err(ParseError::new(
                    d.line,
                    d.col,
                    format!("expected denominator, found {}", other.describe()),
                )),
            }
        } else {
            Ok((numer, line, col))
        }
    }

    /// `e` or a sequence of `(x,y)` pairs, resolved to joint indices.
    fn expect_position(&mut self, alphabets: &MoveAlphabets) -> Result<Position, ParseError> {
        if self.peek_ident() == Some("e") {
            self.pos += 1;
            return Ok(Position::empty());
        }
        let mut moves = Vec::new();
        if !matches!(self.peek().map(|t| &t.tok), Some(Tok::LParen)) {
            return Err(self.error_here("expected a position: 'e' or '(x,y)' pairs"));
        }
        while self.eat(&Tok::LParen) {
            let (xl, xline, xcol) = self.expect_ident("player I move label")?;
            self.expect(Tok::Comma, "','")?;
            let (yl, yline, ycol) = self.expect_ident("player II move label")?;
            self.expect(Tok::RParen, "')'")?;
            let x = alphabets
                .move_index(Player::I, &xl)
                .map_err(|e| ParseError::new(xline, xcol, e.to_string()))?;
            let y = alphabets
                .move_index(Player::II, &yl)
                .map_err(|e| ParseError::new(yline, ycol, e.to_string()))?;
            moves.push(alphabets.joint_index(x, y));
        }
        Ok(Position::from_moves(moves))
    }
}

fn check_row_sum(row_sum: &Q, line: usize, col: usize) -> Result<(), ParseError> {
    let tol = q(
        crate::game::ROW_SUM_TOLERANCE.0,
        crate::game::ROW_SUM_TOLERANCE.1,
    );
    if (row_sum.clone() - Q::one()).abs() > tol {
        return Err(ParseError::new(
            line,
            col,
            format!(
                "non-stochastic row: probabilities sum to {}, expected 1",
                format_q(row_sum)
            ),
        ));
    }
    Ok(())
}

struct DfaBlock {
    name: String,
    state_names: Vec<String>,
    labels: Vec<StateLabel>,
    rows: Vec<Option<Vec<Q>>>,
    start: usize,
    transitions: Vec<Vec<usize>>,
    keyword_line: usize,
    keyword_col: usize,
}

/// Parse one `dfa ... { ... }` block. In game mode states carry
/// `u=`/`accepting`/`terminal`; in strategy mode they carry `play {...}`.
fn parse_dfa_block(
    p: &mut Parser,
    alphabets: &MoveAlphabets,
    strategy_mode: bool,
    owner: Player,
) -> Result<DfaBlock, ParseError> {
    let (kw_line, kw_col) = p.expect_keyword("dfa")?;
    let name = if matches!(p.peek().map(|t| &t.tok), Some(Tok::Str(_))) {
        p.expect_str("dfa name")?.0
    } else {
        String::new()
    };
    p.expect(Tok::LBrace, "'{'")?;

    let joint = alphabets.joint_len();
    let mut state_names: Vec<String> = Vec::new();
    let mut labels: Vec<StateLabel> = Vec::new();
    let mut rows: Vec<Option<Vec<Q>>> = Vec::new();
    let mut transitions: Vec<Vec<Option<(usize, usize, usize)>>> = Vec::new();
    let mut start_name: Option<(String, usize, usize)> = None;

    loop {
        if p.eat(&Tok::RBrace) {
            break;
        }
        let (word, line, col) = p.expect_ident("dfa statement")?;
        match word.as_str() {
            "start" => {
                let (name, nline, ncol) = p.expect_ident("start state name")?;
                if start_name.is_some() {
                    return Err(ParseError::new(line, col, "duplicate start declaration"));
                }
                start_name = Some((name, nline, ncol));
                p.expect(Tok::Semi, "';'")?;
            }
            "state" => {
                let (name, nline, ncol) = p.expect_ident("state name")?;
                if state_names.contains(&name) {
                    return Err(ParseError::new(
                        nline,
                        ncol,
                        format!("duplicate state '{name}'"),
                    ));
                }
                let mut label = StateLabel::new(None, false, false);
                let mut row: Option<Vec<Q>> = None;
                loop {
                    match p.peek_ident() {
                        Some("u") if !strategy_mode => {
                            p.pos += 1;
                            p.expect(Tok::Eq, "'='")?;
                            let (v, _, _) = p.expect_number("payoff value")?;
                            label.u = Some(v);
                        }
                        Some("accepting") if !strategy_mode => {
                            p.pos += 1;
                            label.accepting = true;
                        }
                        Some("terminal") if !strategy_mode => {
                            p.pos += 1;
                            label.terminal = true;
                        }
                        Some("play") if strategy_mode => {
                            p.pos += 1;
                            let (r, rline, rcol) = parse_play_row(p, alphabets, owner)?;
                            let sum: Q = r.iter().cloned().sum();
                            check_row_sum(&sum, rline, rcol)?;
                            row = Some(r);
                        }
                        _ => break,
                    }
                }
                if strategy_mode && row.is_none() {
                    return Err(ParseError::new(
                        nline,
                        ncol,
                        format!("state '{name}' is missing a play row"),
                    ));
                }
                p.expect(Tok::Semi, "';'")?;
                state_names.push(name);
                labels.push(label);
                rows.push(row);
                transitions.push(vec![None; joint]);
            }
            source => {
                // Transition: <source> (x,y) -> <target>;
                let src = state_names
                    .iter()
                    .position(|s| s == source)
                    .ok_or_else(|| {
                        ParseError::new(
                            line,
                            col,
                            format!("unknown state '{source}' (declare states before transitions)"),
                        )
                    })?;
                p.expect(Tok::LParen, "'('")?;
                let (xl, xline, xcol) = p.expect_ident("player I move label")?;
                p.expect(Tok::Comma, "','")?;
                let (yl, yline, ycol) = p.expect_ident("player II move label")?;
                p.expect(Tok::RParen, "')'")?;
                p.expect(Tok::Arrow, "'->'")?;
                let (target, tline, tcol) = p.expect_ident("target state name")?;
                p.expect(Tok::Semi, "';'")?;

                let x = alphabets
                    .move_index(Player::I, &xl)
                    .map_err(|e| ParseError::new(xline, xcol, e.to_string()))?;
                let y = alphabets
                    .move_index(Player::II, &yl)
                    .map_err(|e| ParseError::new(yline, ycol, e.to_string()))?;
                let z = alphabets.joint_index(x, y);
                let dst = state_names
                    .iter()
                    .position(|s| s == &target)
                    .ok_or_else(|| {
                        ParseError::new(
                            tline,
                            tcol,
                            format!("unknown state '{target}' (declare states before transitions)"),
                        )
                    })?;
                if transitions[src][z].is_some() {
                    return Err(ParseError::new(
                        line,
                        col,
                        format!("duplicate transition from '{source}' on ({xl},{yl})"),
                    ));
                }
                if labels[src].terminal && dst != src {
                    return Err(ParseError::new(
                        line,
                        col,
                        format!("terminal state '{source}' has an outgoing non-self transition"),
                    ));
                }
                transitions[src][z] = Some((dst, line, col));
            }
        }
    }

    if state_names.is_empty() {
        return Err(ParseError::new(kw_line, kw_col, "dfa has no states"));
    }
    let (start_name, sline, scol) = start_name
        .ok_or_else(|| ParseError::new(kw_line, kw_col, "dfa is missing a start declaration"))?;
    let start = state_names
        .iter()
        .position(|s| s == &start_name)
        .ok_or_else(|| {
            ParseError::new(sline, scol, format!("unknown start state '{start_name}'"))
        })?;

    // Terminal states may omit transitions (implicit self-loops); all
    // other states must be total.
    let mut resolved: Vec<Vec<usize>> = Vec::with_capacity(state_names.len());
    for (s, row) in transitions.iter().enumerate() {
        let mut out = Vec::with_capacity(joint);
        for (z, entry) in row.iter().enumerate() {
            match entry {
                Some((dst, _, _)) => out.push(*dst),
                None if labels[s].terminal => out.push(s),
                None => {
                    let (xl, yl) = alphabets.joint_label(z);
                    return Err(ParseError::new(
                        kw_line,
                        kw_col,
                        format!(
                            "transition function is not total: state '{}' has no transition on ({xl},{yl})",
                            state_names[s]
                        ),
                    ));
                }
            }
        }
        resolved.push(out);
    }

    Ok(DfaBlock {
        name,
        state_names,
        labels,
        rows,
        start,
        transitions: resolved,
        keyword_line: kw_line,
        keyword_col: kw_col,
    })
}

/// `{move: prob, ...}`; omitted moves get probability zero.
fn parse_play_row(
    p: &mut Parser,
    alphabets: &MoveAlphabets,
    owner: Player,
) -> Result<(Vec<Q>, usize, usize), ParseError> {
    let open = p.expect(Tok::LBrace, "'{'")?;
    let count = alphabets.move_count(owner);
    let mut row = vec![Q::zero(); count];
    let mut seen = vec![false; count];
    loop {
        if p.eat(&Tok::RBrace) {
            break;
        }
        let (label, lline, lcol) = p.expect_ident("move label")?;
        let idx = alphabets
            .move_index(owner, &label)
            .map_err(|e| ParseError::new(lline, lcol, e.to_string()))?;
        if seen[idx] {
            return Err(ParseError::new(
                lline,
                lcol,
                format!("duplicate move '{label}' in play row"),
            ));
        }
        seen[idx] = true;
        p.expect(Tok::Colon, "':'")?;
        let (v, vline, vcol) = p.expect_number("probability")?;
        if v.is_negative() {
            return Err(ParseError::new(vline, vcol, "negative probability"));
        }
        row[idx] = v;
        if !p.eat(&Tok::Comma) {
            p.expect(Tok::RBrace, "'}' or ','")?;
            break;
        }
    }
    Ok((row, open.line, open.col))
}

fn parse_move_set(p: &mut Parser) -> Result<Vec<String>, ParseError> {
    p.expect(Tok::Eq, "'='")?;
    p.expect(Tok::LBrace, "'{'")?;
    let mut moves = Vec::new();
    loop {
        if p.eat(&Tok::RBrace) {
            break;
        }
        let (label, line, col) = p.expect_ident("move label")?;
        if moves.contains(&label) {
            return Err(ParseError::new(
                line,
                col,
                format!("duplicate move label '{label}'"),
            ));
        }
        moves.push(label);
        if !p.eat(&Tok::Comma) {
            p.expect(Tok::RBrace, "'}' or ','")?;
            break;
        }
    }
    Ok(moves)
}

/// Parse a game document.
pub fn parse_game(text: &str) -> Result<GameSpec, ParseError> {
    let mut p = Parser::new(text)?;

    p.expect_keyword("game")?;
    let (name, _, _) = p.expect_str("game name")?;

    let mut x_moves: Option<Vec<String>> = None;
    let mut y_moves: Option<Vec<String>> = None;
    let mut kind: Option<(GameKind, usize, usize)> = None;
    let mut bounds: Option<((Q, Q), usize, usize)> = None;
    let mut start_position: Option<Position> = None;
    let mut matrix: Option<(Vec<Vec<Q>>, usize, usize)> = None;
    let mut dfas: Vec<DfaBlock> = Vec::new();

    let alphabets_of = |x: &Option<Vec<String>>,
                        y: &Option<Vec<String>>,
                        line: usize,
                        col: usize|
     -> Result<MoveAlphabets, ParseError> {
        let x = x
            .clone()
            .ok_or_else(|| ParseError::new(line, col, "moves I must be declared first"))?;
        let y = y
            .clone()
            .ok_or_else(|| ParseError::new(line, col, "moves II must be declared first"))?;
        MoveAlphabets::new(x, y).map_err(|e| ParseError::new(line, col, e.to_string()))
    };

    while !p.at_end() {
        let (word, line, col) = p.expect_ident("section")?;
        match word.as_str() {
            "moves" => {
                let (who, wline, wcol) = p.expect_ident("player (I or II)")?;
                let set = parse_move_set(&mut p)?;
                match who.as_str() {
                    "I" => x_moves = Some(set),
                    "II" => y_moves = Some(set),
                    other => {
                        return Err(ParseError::new(
                            wline,
                            wcol,
                            format!("expected player I or II, found '{other}'"),
                        ))
                    }
                }
            }
            "kind" => {
                p.expect(Tok::Eq, "'='")?;
                let (token, kline, kcol) = p.expect_ident("game kind")?;
                let k =
                    match token.as_str() {
                        "matrix" => GameKind::Matrix,
                        "finite" => {
                            let (n, nline, ncol) = p.expect_number("horizon")?;
                            if !n.denom().is_one() || n.is_negative() {
                                return Err(ParseError::new(
                                    nline,
                                    ncol,
                                    "horizon must be a nonnegative integer",
                                ));
                            }
                            GameKind::Finite(n.numer().to_string().parse().map_err(|_| {
                                ParseError::new(nline, ncol, "horizon out of range")
                            })?)
                        }
                        "generalized-open" => GameKind::GeneralizedOpen,
                        "open-set" => GameKind::OpenSet,
                        "gdelta" => GameKind::GDelta,
                        "union" => GameKind::UnionOfOpen,
                        other => {
                            return Err(ParseError::new(
                                kline,
                                kcol,
                                format!("unknown game kind '{other}'"),
                            ))
                        }
                    };
                kind = Some((k, kline, kcol));
            }
            "bounds" => {
                p.expect(Tok::Eq, "'='")?;
                p.expect(Tok::LBracket, "'['")?;
                let (lo, _, _) = p.expect_number("lower bound")?;
                p.expect(Tok::Comma, "','")?;
                let (hi, _, _) = p.expect_number("upper bound")?;
                p.expect(Tok::RBracket, "']'")?;
                bounds = Some(((lo, hi), line, col));
            }
            "start" => {
                p.expect(Tok::Eq, "'='")?;
                let alphabets = alphabets_of(&x_moves, &y_moves, line, col)?;
                start_position = Some(p.expect_position(&alphabets)?);
            }
            "matrix" => {
                p.expect(Tok::Colon, "':'")?;
                // Rows are grouped by source line.
                let mut rows: Vec<Vec<Q>> = Vec::new();
                let mut current_line = 0usize;
                while matches!(p.peek().map(|t| &t.tok), Some(Tok::Num(_))) {
                    let tline = p.peek().map(|t| t.line).unwrap_or(0);
                    let (v, _, _) = p.expect_number("matrix entry")?;
                    if tline != current_line {
                        rows.push(Vec::new());
                        current_line = tline;
                    }
                    rows.last_mut().unwrap().push(v);
                }
                matrix = Some((rows, line, col));
            }
            "dfa" => {
                p.pos -= 1; // hand the keyword back to the block parser
                let alphabets = alphabets_of(&x_moves, &y_moves, line, col)?;
                dfas.push(parse_dfa_block(&mut p, &alphabets, false, Player::I)?);
            }
            other => {
                return Err(ParseError::new(
                    line,
                    col,
                    format!("unknown section '{other}'"),
                ));
            }
        }
    }

    let eof = (p.end_line, 1usize);
    let alphabets = alphabets_of(&x_moves, &y_moves, eof.0, eof.1)?;
    let (kind, kind_line, kind_col) =
        kind.ok_or_else(|| ParseError::new(eof.0, eof.1, "missing 'kind' section"))?;
    let ((lo, hi), bounds_line, bounds_col) =
        bounds.ok_or_else(|| ParseError::new(eof.0, eof.1, "missing 'bounds' section"))?;
    let start_position = start_position.unwrap_or_default();

    let matrix_loc = matrix
        .as_ref()
        .map(|(_, l, c)| (*l, *c))
        .unwrap_or((kind_line, kind_col));
    let build_automaton = |block: &DfaBlock| -> Result<PayoffAutomaton, ParseError> {
        PayoffAutomaton::new(
            block.name.clone(),
            block.state_names.clone(),
            block.labels.clone(),
            block.start,
            block.transitions.clone(),
            alphabets.joint_len(),
        )
        .map_err(|e| ParseError::new(block.keyword_line, block.keyword_col, e.to_string()))
    };

    let descriptor = match kind {
        GameKind::Matrix => {
            let (rows, mline, mcol) = matrix.ok_or_else(|| {
                ParseError::new(eof.0, eof.1, "matrix kind needs a matrix section")
            })?;
            if rows.len() != alphabets.x_len() || rows.iter().any(|r| r.len() != alphabets.y_len())
            {
                return Err(ParseError::new(
                    mline,
                    mcol,
                    format!(
                        "matrix dimension mismatch: expected {} rows of {} entries",
                        alphabets.x_len(),
                        alphabets.y_len()
                    ),
                ));
            }
            crate::game::PayoffDescriptor::Table(rows)
        }
        GameKind::UnionOfOpen => {
            if dfas.is_empty() {
                return Err(ParseError::new(
                    eof.0,
                    eof.1,
                    "union kind needs at least one dfa block",
                ));
            }
            let auts = dfas
                .iter()
                .map(build_automaton)
                .collect::<Result<Vec<_>, _>>()?;
            crate::game::PayoffDescriptor::Union(auts)
        }
        _ => {
            if dfas.len() != 1 {
                return Err(ParseError::new(
                    eof.0,
                    eof.1,
                    format!("kind '{}' needs exactly one dfa block", kind.token()),
                ));
            }
            crate::game::PayoffDescriptor::Automaton(build_automaton(&dfas[0])?)
        }
    };

    let dfa_loc = dfas
        .first()
        .map(|b| (b.keyword_line, b.keyword_col))
        .unwrap_or(eof);
    GameSpec::new(name, alphabets, kind, descriptor, (lo, hi), start_position).map_err(|e| {
        let (line, col) = match &e {
            ModelError::BoundsInverted | ModelError::BoundsExcludeIndicator => {
                (bounds_line, bounds_col)
            }
            ModelError::MissingPayoff { .. }
            | ModelError::PayoffOutOfBounds { .. }
            | ModelError::TerminalNotAbsorbing { .. }
            | ModelError::TransitionShape { .. } => dfa_loc,
            ModelError::MatrixShape { .. } | ModelError::EntryOutOfBounds { .. } => matrix_loc,
            _ => (kind_line, kind_col),
        };
        ParseError::new(line, col, e.to_string())
    })
}

/// Parse a strategy document against the alphabets of the game it will
/// play in.
pub fn parse_strategy(
    text: &str,
    alphabets: &MoveAlphabets,
) -> Result<BehavioralStrategy, ParseError> {
    let mut p = Parser::new(text)?;
    p.expect_keyword("strategy")?;
    let (who, wline, wcol) = p.expect_ident("player (I or II)")?;
    let owner = match who.as_str() {
        "I" => Player::I,
        "II" => Player::II,
        other => {
            return Err(ParseError::new(
                wline,
                wcol,
                format!("expected player I or II, found '{other}'"),
            ))
        }
    };
    let name = if matches!(p.peek().map(|t| &t.tok), Some(Tok::Str(_))) {
        p.expect_str("strategy name")?.0
    } else {
        String::new()
    };
    let move_count = alphabets.move_count(owner);

    let body = match p.peek_ident() {
        Some("uniform") => {
            p.pos += 1;
            StrategyBody::Uniform
        }
        Some("at") => {
            let mut entries: Vec<(Position, Vec<Q>)> = Vec::new();
            let mut seen: BTreeMap<Position, (usize, usize)> = BTreeMap::new();
            while p.peek_ident() == Some("at") {
                let (_, aline, acol) = p.expect_ident("'at'")?;
                let pos = p.expect_position(alphabets)?;
                if seen.contains_key(&pos) {
                    return Err(ParseError::new(aline, acol, "duplicate table position"));
                }
                seen.insert(pos.clone(), (aline, acol));
                p.expect_keyword("play")?;
                let (row, rline, rcol) = parse_play_row(&mut p, alphabets, owner)?;
                let sum: Q = row.iter().cloned().sum();
                check_row_sum(&sum, rline, rcol)?;
                entries.push((pos, row));
            }
            let table = BehavioralStrategy::table(owner, name.clone(), entries, move_count)
                .map_err(|e| ParseError::new(wline, wcol, e.to_string()))?;
            table.body
        }
        Some("dfa") => {
            let block = parse_dfa_block(&mut p, alphabets, true, owner)?;
            let rows: Vec<Vec<Q>> = block
                .rows
                .iter()
                .map(|r| r.clone().expect("strategy states always carry a play row"))
                .collect();
            let automaton =
                StrategyAutomaton::new(block.state_names, rows, block.start, block.transitions)
                    .map_err(|e| {
                        ParseError::new(block.keyword_line, block.keyword_col, e.to_string())
                    })?;
            let fs = BehavioralStrategy::finite_state(owner, name.clone(), automaton, move_count)
                .map_err(|e| {
                ParseError::new(block.keyword_line, block.keyword_col, e.to_string())
            })?;
            fs.body
        }
        _ => {
            return Err(p.error_here("expected 'uniform', 'at' entries, or a dfa block"));
        }
    };
    if !p.at_end() {
        return Err(p.error_here("unexpected trailing input"));
    }
    Ok(BehavioralStrategy { owner, name, body })
}

fn render_position(p: &Position, alphabets: &MoveAlphabets) -> String {
    if p.is_empty() {
        return "e".to_string();
    }
    p.moves()
        .iter()
        .map(|&z| {
            let (x, y) = alphabets.joint_label(z);
            format!("({x},{y})")
        })
        .collect()
}

fn render_automaton(aut: &PayoffAutomaton, alphabets: &MoveAlphabets, out: &mut String) {
    out.push_str(&format!("dfa \"{}\" {{\n", aut.name));
    out.push_str(&format!("  start {};\n", aut.state_name(aut.start())));
    for s in 0..aut.num_states() {
        let lab = aut.label(s);
        let mut line = format!("  state {}", aut.state_name(s));
        if let Some(u) = &lab.u {
            line.push_str(&format!(" u={}", format_q(u)));
        }
        if lab.accepting {
            line.push_str(" accepting");
        }
        if lab.terminal {
            line.push_str(" terminal");
        }
        line.push_str(";\n");
        out.push_str(&line);
    }
    for s in 0..aut.num_states() {
        if aut.label(s).terminal {
            continue; // self-loops are implicit
        }
        for (z, &t) in aut.transitions(s).iter().enumerate() {
            let (x, y) = alphabets.joint_label(z);
            out.push_str(&format!(
                "  {} ({x},{y}) -> {};\n",
                aut.state_name(s),
                aut.state_name(t)
            ));
        }
    }
    out.push_str("}\n");
}

/// Canonical text form of a game.
pub fn serialize_game(spec: &GameSpec) -> String {
    let mut out = String::new();
    out.push_str(&format!("game \"{}\"\n", spec.name));
    out.push_str(&format!(
        "moves I = {{{}}}\n",
        spec.alphabets.moves(Player::I).join(", ")
    ));
    out.push_str(&format!(
        "moves II = {{{}}}\n",
        spec.alphabets.moves(Player::II).join(", ")
    ));
    out.push_str(&format!("kind = {}\n", spec.kind.token()));
    out.push_str(&format!(
        "bounds = [{}, {}]\n",
        format_q(&spec.bounds.0),
        format_q(&spec.bounds.1)
    ));
    if !spec.start_position.is_empty() {
        out.push_str(&format!(
            "start = {}\n",
            render_position(&spec.start_position, &spec.alphabets)
        ));
    }
    match &spec.descriptor {
        crate::game::PayoffDescriptor::Table(rows) => {
            out.push_str("matrix:\n");
            for row in rows {
                let cells: Vec<String> = row.iter().map(format_q).collect();
                out.push_str(&format!("  {}\n", cells.join(" ")));
            }
        }
        crate::game::PayoffDescriptor::Automaton(aut) => {
            render_automaton(aut, &spec.alphabets, &mut out);
        }
        crate::game::PayoffDescriptor::Union(auts) => {
            for aut in auts {
                render_automaton(aut, &spec.alphabets, &mut out);
            }
        }
    }
    out
}

/// Canonical text form of a strategy, rendered against the game's
/// alphabets.
pub fn serialize_strategy(strategy: &BehavioralStrategy, alphabets: &MoveAlphabets) -> String {
    let mut out = String::new();
    out.push_str(&format!("strategy {}", strategy.owner));
    if !strategy.name.is_empty() {
        out.push_str(&format!(" \"{}\"", strategy.name));
    }
    out.push('\n');
    let moves = alphabets.moves(strategy.owner);
    let render_row = |row: &[Q]| -> String {
        let cells: Vec<String> = moves
            .iter()
            .zip(row)
            .map(|(m, v)| format!("{m}: {}", format_q(v)))
            .collect();
        format!("{{{}}}", cells.join(", "))
    };
    match &strategy.body {
        StrategyBody::Uniform => out.push_str("uniform\n"),
        StrategyBody::Table(entries) => {
            for (pos, row) in entries {
                out.push_str(&format!(
                    "at {} play {}\n",
                    render_position(pos, alphabets),
                    render_row(row)
                ));
            }
        }
        StrategyBody::FiniteState(aut) => {
            out.push_str("dfa {\n");
            out.push_str(&format!("  start {};\n", aut.state_names()[aut.start()]));
            for (s, name) in aut.state_names().iter().enumerate() {
                out.push_str(&format!(
                    "  state {name} play {};\n",
                    render_row(&aut.rows()[s])
                ));
            }
            for (s, name) in aut.state_names().iter().enumerate() {
                for (z, &t) in aut.transitions(s).iter().enumerate() {
                    let (x, y) = alphabets.joint_label(z);
                    out.push_str(&format!(
                        "  {name} ({x},{y}) -> {};\n",
                        aut.state_names()[t]
                    ));
                }
            }
            out.push_str("}\n");
        }
    }
    out
}
