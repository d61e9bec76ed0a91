//! A minimal reader for the `.efg` v2 text format, used as an independent
//! grammar check on the exporter. It tokenizes quoted strings (doubled
//! quotes escape), integers, rationals, and decimals, and rebuilds the node
//! lines; it deliberately shares no code with the exporter.

#[derive(Clone, PartialEq, Debug)]
pub enum ParsedNode {
    Chance { label: String, iset: usize, pairs: Vec<(String, f64)> },
    Personal { label: String, player: usize, iset: usize, actions: Vec<String> },
    Terminal { label: String, outcome: usize, payoffs: Vec<f64> },
}

#[derive(Clone, PartialEq, Debug)]
pub struct ParsedEfg {
    pub title: String,
    pub players: Vec<String>,
    pub nodes: Vec<ParsedNode>,
}

#[derive(Clone, PartialEq, Debug)]
enum Token {
    Word(String),
    Quoted(String),
    Number(f64),
    Open,
    Close,
    Comma,
}

fn tokenize(text: &str) -> Result<Vec<Token>, String> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '{' {
            out.push(Token::Open);
            i += 1;
        } else if c == '}' {
            out.push(Token::Close);
            i += 1;
        } else if c == ',' {
            out.push(Token::Comma);
            i += 1;
        } else if c == '"' {
            i += 1;
            let mut s = String::new();
            loop {
                if i >= chars.len() {
                    return Err("unterminated string".into());
                }
                if chars[i] == '"' {
                    if i + 1 < chars.len() && chars[i + 1] == '"' {
                        s.push('"');
                        i += 2;
                    } else {
                        i += 1;
                        break;
                    }
                } else {
                    s.push(chars[i]);
                    i += 1;
                }
            }
            out.push(Token::Quoted(s));
        } else if c == '-' || c.is_ascii_digit() {
            let start = i;
            i += 1;
            while i < chars.len()
                && (chars[i].is_ascii_digit()
                    || matches!(chars[i], '.' | 'e' | 'E' | '/')
                    || ((chars[i] == '-' || chars[i] == '+')
                        && matches!(chars[i - 1], 'e' | 'E')))
            {
                i += 1;
            }
            let lit: String = chars[start..i].iter().collect();
            let value = if let Some((a, b)) = lit.split_once('/') {
                let num: f64 = a.parse().map_err(|_| format!("bad numerator {a:?}"))?;
                let den: f64 = b.parse().map_err(|_| format!("bad denominator {b:?}"))?;
                if den == 0.0 {
                    return Err(format!("zero denominator in {lit:?}"));
                }
                num / den
            } else {
                lit.parse().map_err(|_| format!("bad number {lit:?}"))?
            };
            out.push(Token::Number(value));
        } else if c.is_alphabetic() {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token::Word(chars[start..i].iter().collect()));
        } else {
            return Err(format!("unexpected character {c:?}"));
        }
    }
    Ok(out)
}

struct Cursor {
    tokens: Vec<Token>,
    pos: usize,
}

impl Cursor {
    fn eat(&mut self, want: &str) -> Result<Token, String> {
        let t = self.tokens.get(self.pos).cloned().ok_or_else(|| format!("missing {want}"))?;
        self.pos += 1;
        Ok(t)
    }

    fn done(&self) -> bool {
        self.pos >= self.tokens.len()
    }
}

pub fn parse_efg_text(text: &str) -> Result<ParsedEfg, String> {
    let mut cur = Cursor { tokens: tokenize(text)?, pos: 0 };
    let word = |t: Token| match t {
        Token::Word(w) => Ok(w),
        other => Err(format!("expected a word, got {other:?}")),
    };
    let quoted = |t: Token| match t {
        Token::Quoted(s) => Ok(s),
        other => Err(format!("expected a string, got {other:?}")),
    };
    let number = |t: Token| match t {
        Token::Number(v) => Ok(v),
        other => Err(format!("expected a number, got {other:?}")),
    };
    let index = |t: Token| -> Result<usize, String> {
        let v = number(t)?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(format!("expected an index, got {v}"));
        }
        Ok(v as usize)
    };

    if word(cur.eat("header")?)? != "EFG" {
        return Err("missing EFG header".into());
    }
    if index(cur.eat("version")?)? != 2 {
        return Err("unsupported version".into());
    }
    if word(cur.eat("payoff kind")?)? != "R" {
        return Err("expected rational payoffs (R)".into());
    }
    let title = quoted(cur.eat("title")?)?;
    if cur.eat("player list")? != Token::Open {
        return Err("expected { before players".into());
    }
    let mut players = Vec::new();
    loop {
        match cur.eat("player or }")? {
            Token::Close => break,
            Token::Quoted(p) => players.push(p),
            other => return Err(format!("unexpected token in player list: {other:?}")),
        }
    }

    let mut nodes = Vec::new();
    while !cur.done() {
        let tag = word(cur.eat("node tag")?)?;
        match tag.as_str() {
            "c" => {
                let label = quoted(cur.eat("label")?)?;
                let iset = index(cur.eat("chance iset")?)?;
                let _iset_name = quoted(cur.eat("iset name")?)?;
                if cur.eat("{")? != Token::Open {
                    return Err("expected { in chance line".into());
                }
                let mut pairs = Vec::new();
                loop {
                    match cur.eat("action or }")? {
                        Token::Close => break,
                        Token::Quoted(a) => {
                            let p = number(cur.eat("probability")?)?;
                            pairs.push((a, p));
                        }
                        other => return Err(format!("unexpected token: {other:?}")),
                    }
                }
                let outcome = index(cur.eat("outcome")?)?;
                if outcome != 0 {
                    return Err("chance lines carry no outcome".into());
                }
                let sum: f64 = pairs.iter().map(|(_, p)| p).sum();
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(format!("chance probabilities sum to {sum}"));
                }
                nodes.push(ParsedNode::Chance { label, iset, pairs });
            }
            "p" => {
                let label = quoted(cur.eat("label")?)?;
                let player = index(cur.eat("player")?)?;
                let iset = index(cur.eat("player iset")?)?;
                let _iset_name = quoted(cur.eat("iset name")?)?;
                if cur.eat("{")? != Token::Open {
                    return Err("expected { in personal line".into());
                }
                let mut actions = Vec::new();
                loop {
                    match cur.eat("action or }")? {
                        Token::Close => break,
                        Token::Quoted(a) => actions.push(a),
                        other => return Err(format!("unexpected token: {other:?}")),
                    }
                }
                let outcome = index(cur.eat("outcome")?)?;
                if outcome != 0 {
                    return Err("personal lines carry no outcome here".into());
                }
                if player == 0 || player > players.len() {
                    return Err(format!("player number {player} out of range"));
                }
                nodes.push(ParsedNode::Personal { label, player, iset, actions });
            }
            "t" => {
                let label = quoted(cur.eat("label")?)?;
                let outcome = index(cur.eat("outcome")?)?;
                let _outcome_name = quoted(cur.eat("outcome name")?)?;
                if cur.eat("{")? != Token::Open {
                    return Err("expected { in terminal line".into());
                }
                let mut payoffs = Vec::new();
                let mut expect_value = true;
                loop {
                    match cur.eat("payoff or }")? {
                        Token::Close => break,
                        Token::Number(v) if expect_value => {
                            payoffs.push(v);
                            expect_value = false;
                        }
                        Token::Comma if !expect_value => expect_value = true,
                        other => return Err(format!("unexpected token: {other:?}")),
                    }
                }
                if payoffs.len() != players.len() {
                    return Err(format!(
                        "terminal has {} payoffs for {} players",
                        payoffs.len(),
                        players.len()
                    ));
                }
                nodes.push(ParsedNode::Terminal { label, outcome, payoffs });
            }
            other => return Err(format!("unknown node tag {other:?}")),
        }
    }
    if nodes.is_empty() {
        return Err("no nodes".into());
    }
    Ok(ParsedEfg { title, players, nodes })
}
