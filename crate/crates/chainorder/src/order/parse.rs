//! Recursive-descent parser and canonical renderer for order terms.
//!
//! Grammar:
//! ```text
//! term := "0" | "1" | "fin(" k ")" | "w" | "w*" | "z"
//!       | "sum(" idx ";" term-list [";" term [";" term]] ")"
//! idx  := "fin" | "w" | "w*" | "z"
//! ```
//! The second tail is accepted only for `z`-indexed sums (far-negative
//! then far-positive rule); a single tail on a `z` sum applies to both
//! sides. `eta` is recognized and rejected: the dense order is not a
//! scattered term.

use super::{normalize, IndexKind, OrderTerm, TermError};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(u64),
    Word(String),
    Star,
    LParen,
    RParen,
    Semi,
    Comma,
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>, TermError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '(' => {
                toks.push((Tok::LParen, i));
                i += 1;
            }
            ')' => {
                toks.push((Tok::RParen, i));
                i += 1;
            }
            ';' => {
                toks.push((Tok::Semi, i));
                i += 1;
            }
            ',' => {
                toks.push((Tok::Comma, i));
                i += 1;
            }
            '*' => {
                toks.push((Tok::Star, i));
                i += 1;
            }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let n: u64 = src[start..i].parse().map_err(|_| TermError::Syntax {
                    pos: start,
                    msg: "number too large".into(),
                })?;
                toks.push((Tok::Num(n), start));
            }
            'a'..='z' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_lowercase() {
                    i += 1;
                }
                toks.push((Tok::Word(src[start..i].to_string()), start));
            }
            other => {
                return Err(TermError::Syntax {
                    pos: i,
                    msg: format!("unexpected character '{other}'"),
                })
            }
        }
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn next(&mut self) -> Option<(Tok, usize)> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<usize, TermError> {
        let at = self.here();
        match self.next() {
            Some((t, p)) if t == want => Ok(p),
            Some((t, p)) => Err(TermError::Syntax {
                pos: p,
                msg: format!("expected {what}, found {t:?}"),
            }),
            None => Err(TermError::Syntax {
                pos: at,
                msg: format!("expected {what}, found end of input"),
            }),
        }
    }

    fn parse_term(&mut self) -> Result<OrderTerm, TermError> {
        let at = self.here();
        match self.next() {
            Some((Tok::Num(0), _)) => Ok(OrderTerm::Zero),
            Some((Tok::Num(1), _)) => Ok(OrderTerm::One),
            Some((Tok::Num(_), p)) => Err(TermError::Syntax {
                pos: p,
                msg: "bare numbers other than 0 and 1 are not terms; use fin(k)".into(),
            }),
            Some((Tok::Word(w), p)) => match w.as_str() {
                "w" => {
                    if self.peek() == Some(&Tok::Star) {
                        self.next();
                        Ok(OrderTerm::OmegaStar)
                    } else {
                        Ok(OrderTerm::Omega)
                    }
                }
                "z" => Ok(OrderTerm::Zeta),
                "eta" => Err(TermError::Semantic {
                    pos: p,
                    msg: "eta denotes the dense countable order, which is not scattered and \
                          is rejected here"
                        .into(),
                }),
                "fin" => {
                    self.expect(Tok::LParen, "'(' after fin")?;
                    let at = self.here();
                    let k = match self.next() {
                        Some((Tok::Num(k), _)) => k,
                        _ => {
                            return Err(TermError::Syntax {
                                pos: at,
                                msg: "expected a number inside fin(..)".into(),
                            })
                        }
                    };
                    if k == 0 {
                        return Err(TermError::Semantic {
                            pos: at,
                            msg: "fin(k) requires k >= 1".into(),
                        });
                    }
                    self.expect(Tok::RParen, "')' after fin(k")?;
                    Ok(OrderTerm::Fin(k))
                }
                "sum" => self.parse_sum(p),
                other => Err(TermError::Syntax {
                    pos: p,
                    msg: format!("unknown term '{other}'"),
                }),
            },
            Some((t, p)) => Err(TermError::Syntax {
                pos: p,
                msg: format!("expected a term, found {t:?}"),
            }),
            None => Err(TermError::Syntax {
                pos: at,
                msg: "expected a term, found end of input".into(),
            }),
        }
    }

    fn parse_index(&mut self) -> Result<IndexKind, TermError> {
        let at = self.here();
        match self.next() {
            Some((Tok::Word(w), p)) => match w.as_str() {
                "fin" => Ok(IndexKind::FinIdx),
                "w" => {
                    if self.peek() == Some(&Tok::Star) {
                        self.next();
                        Ok(IndexKind::OmegaStarIdx)
                    } else {
                        Ok(IndexKind::OmegaIdx)
                    }
                }
                "z" => Ok(IndexKind::ZetaIdx),
                other => Err(TermError::Syntax {
                    pos: p,
                    msg: format!("unknown index kind '{other}' (expected fin, w, w*, or z)"),
                }),
            },
            _ => Err(TermError::Syntax {
                pos: at,
                msg: "expected an index kind (fin, w, w*, or z)".into(),
            }),
        }
    }

    fn parse_sum(&mut self, sum_pos: usize) -> Result<OrderTerm, TermError> {
        self.expect(Tok::LParen, "'(' after sum")?;
        let index = self.parse_index()?;
        self.expect(Tok::Semi, "';' after the index kind")?;

        let mut head = Vec::new();
        if !matches!(self.peek(), Some(Tok::Semi) | Some(Tok::RParen)) {
            head.push(self.parse_term()?);
            while self.peek() == Some(&Tok::Comma) {
                self.next();
                head.push(self.parse_term()?);
            }
        }

        let mut tails = Vec::new();
        while self.peek() == Some(&Tok::Semi) {
            self.next();
            tails.push(self.parse_term()?);
        }
        self.expect(Tok::RParen, "')' closing the sum")?;

        match index {
            IndexKind::FinIdx => {
                if !tails.is_empty() {
                    return Err(TermError::Semantic {
                        pos: sum_pos,
                        msg: "finite-index sums take no tail".into(),
                    });
                }
                Ok(OrderTerm::Sum {
                    index,
                    head,
                    tail: None,
                    tail2: None,
                })
            }
            IndexKind::OmegaIdx | IndexKind::OmegaStarIdx => match tails.len() {
                1 => Ok(OrderTerm::Sum {
                    index,
                    head,
                    tail: Some(Box::new(tails.pop_expect())),
                    tail2: None,
                }),
                0 => Err(TermError::Semantic {
                    pos: sum_pos,
                    msg: "an infinite-index sum requires a tail rule".into(),
                }),
                _ => Err(TermError::Semantic {
                    pos: sum_pos,
                    msg: "only z-indexed sums take two tails".into(),
                }),
            },
            IndexKind::ZetaIdx => match tails.len() {
                1 => {
                    let t = tails.pop_expect();
                    Ok(OrderTerm::Sum {
                        index,
                        head,
                        tail: Some(Box::new(t.clone())),
                        tail2: Some(Box::new(t)),
                    })
                }
                2 => {
                    let pos_tail = tails.pop_expect();
                    let neg_tail = tails.pop_expect();
                    Ok(OrderTerm::Sum {
                        index,
                        head,
                        tail: Some(Box::new(neg_tail)),
                        tail2: Some(Box::new(pos_tail)),
                    })
                }
                0 => Err(TermError::Semantic {
                    pos: sum_pos,
                    msg: "a z-indexed sum requires one or two tail rules".into(),
                }),
                _ => Err(TermError::Semantic {
                    pos: sum_pos,
                    msg: "a z-indexed sum takes at most two tails".into(),
                }),
            },
        }
    }
}

trait PopExpect<T> {
    fn pop_expect(&mut self) -> T;
}

impl<T> PopExpect<T> for Vec<T> {
    fn pop_expect(&mut self) -> T {
        self.pop().expect("length checked by caller")
    }
}

/// Parse and normalize a term.
pub fn parse_term(text: &str) -> Result<OrderTerm, TermError> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
    };
    let term = p.parse_term()?;
    if p.peek().is_some() {
        return Err(TermError::Syntax {
            pos: p.here(),
            msg: "trailing input after the term".into(),
        });
    }
    Ok(normalize(term))
}

/// Canonical text for a term; `parse_term(render_term(t)) == t` on
/// normalized terms.
pub fn render_term(t: &OrderTerm) -> String {
    match t {
        OrderTerm::Zero => "0".into(),
        OrderTerm::One => "1".into(),
        OrderTerm::Fin(k) => format!("fin({k})"),
        OrderTerm::Omega => "w".into(),
        OrderTerm::OmegaStar => "w*".into(),
        OrderTerm::Zeta => "z".into(),
        OrderTerm::Sum {
            index,
            head,
            tail,
            tail2,
        } => {
            let hs = head.iter().map(render_term).collect::<Vec<_>>().join(", ");
            match index {
                IndexKind::FinIdx => format!("sum(fin; {hs})"),
                IndexKind::OmegaIdx | IndexKind::OmegaStarIdx => {
                    let t = render_term(tail.as_ref().expect("tail present"));
                    format!("sum({}; {hs}; {t})", index.token())
                }
                IndexKind::ZetaIdx => {
                    let neg = tail.as_ref().expect("neg tail present");
                    let pos = tail2.as_ref().expect("pos tail present");
                    if neg == pos {
                        format!("sum(z; {hs}; {})", render_term(neg))
                    } else {
                        format!("sum(z; {hs}; {}; {})", render_term(neg), render_term(pos))
                    }
                }
            }
        }
    }
}
