//! S-expression tokenizer and tree builder with line/column tracking.
//! Comments run from `;` to end of line. Symbols are case-sensitive.

use super::PddlError;

#[derive(Debug, Clone)]
pub enum Sexpr {
    Sym { text: String, line: usize, col: usize },
    List { items: Vec<Sexpr>, line: usize, col: usize },
}

impl Sexpr {
    pub fn pos(&self) -> (usize, usize) {
        match self {
            Sexpr::Sym { line, col, .. } | Sexpr::List { line, col, .. } => (*line, *col),
        }
    }

    pub fn as_sym(&self) -> Option<&str> {
        match self {
            Sexpr::Sym { text, .. } => Some(text),
            Sexpr::List { .. } => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexpr]> {
        match self {
            Sexpr::List { items, .. } => Some(items),
            Sexpr::Sym { .. } => None,
        }
    }

    pub fn expect_sym(&self) -> Result<&str, PddlError> {
        self.as_sym().ok_or_else(|| {
            let (line, col) = self.pos();
            PddlError::Syntax { line, col, message: "expected a symbol, found a list".into() }
        })
    }

    pub fn expect_list(&self) -> Result<&[Sexpr], PddlError> {
        self.as_list().ok_or_else(|| {
            let (line, col) = self.pos();
            PddlError::Syntax { line, col, message: "expected a list, found a symbol".into() }
        })
    }
}

enum Token {
    LParen { line: usize, col: usize },
    RParen { line: usize, col: usize },
    Sym { text: String, line: usize, col: usize },
}

fn tokenize(text: &str) -> Result<Vec<Token>, PddlError> {
    let mut tokens = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            ' ' | '\t' | '\r' => {
                chars.next();
                col += 1;
            }
            ';' => {
                while let Some(&c2) = chars.peek() {
                    if c2 == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '(' => {
                tokens.push(Token::LParen { line, col });
                chars.next();
                col += 1;
            }
            ')' => {
                tokens.push(Token::RParen { line, col });
                chars.next();
                col += 1;
            }
            _ => {
                let (sl, sc) = (line, col);
                let mut sym = String::new();
                while let Some(&c2) = chars.peek() {
                    if c2.is_whitespace() || c2 == '(' || c2 == ')' || c2 == ';' {
                        break;
                    }
                    sym.push(c2);
                    chars.next();
                    col += 1;
                }
                tokens.push(Token::Sym { text: sym, line: sl, col: sc });
            }
        }
    }
    Ok(tokens)
}

/// Parses the text into a single top-level s-expression.
pub fn parse_sexpr(text: &str) -> Result<Sexpr, PddlError> {
    let tokens = tokenize(text)?;
    let mut stack: Vec<(usize, usize, Vec<Sexpr>)> = Vec::new();
    let mut top: Option<Sexpr> = None;
    for tok in tokens {
        match tok {
            Token::LParen { line, col } => stack.push((line, col, Vec::new())),
            Token::RParen { line, col } => {
                let Some((l, c, items)) = stack.pop() else {
                    return Err(PddlError::Syntax {
                        line,
                        col,
                        message: "unbalanced closing parenthesis".into(),
                    });
                };
                let expr = Sexpr::List { items, line: l, col: c };
                match stack.last_mut() {
                    Some((_, _, parent)) => parent.push(expr),
                    None => {
                        if top.is_some() {
                            return Err(PddlError::Syntax {
                                line: l,
                                col: c,
                                message: "multiple top-level expressions".into(),
                            });
                        }
                        top = Some(expr);
                    }
                }
            }
            Token::Sym { text, line, col } => {
                let expr = Sexpr::Sym { text, line, col };
                match stack.last_mut() {
                    Some((_, _, parent)) => parent.push(expr),
                    None => {
                        return Err(PddlError::Syntax {
                            line,
                            col,
                            message: "symbol outside any expression".into(),
                        })
                    }
                }
            }
        }
    }
    if let Some((line, col, _)) = stack.pop() {
        return Err(PddlError::Syntax {
            line,
            col,
            message: "unbalanced opening parenthesis".into(),
        });
    }
    top.ok_or(PddlError::Syntax { line: 1, col: 1, message: "empty input".into() })
}

/// Parses a text containing any number of top-level s-expressions.
pub fn parse_sexprs(text: &str) -> Result<Vec<Sexpr>, PddlError> {
    let tokens = tokenize(text)?;
    let mut stack: Vec<(usize, usize, Vec<Sexpr>)> = Vec::new();
    let mut out = Vec::new();
    for tok in tokens {
        match tok {
            Token::LParen { line, col } => stack.push((line, col, Vec::new())),
            Token::RParen { line, col } => {
                let Some((l, c, items)) = stack.pop() else {
                    return Err(PddlError::Syntax {
                        line,
                        col,
                        message: "unbalanced closing parenthesis".into(),
                    });
                };
                let expr = Sexpr::List { items, line: l, col: c };
                match stack.last_mut() {
                    Some((_, _, parent)) => parent.push(expr),
                    None => out.push(expr),
                }
            }
            Token::Sym { text, line, col } => {
                let expr = Sexpr::Sym { text, line, col };
                match stack.last_mut() {
                    Some((_, _, parent)) => parent.push(expr),
                    None => {
                        return Err(PddlError::Syntax {
                            line,
                            col,
                            message: "symbol outside any expression".into(),
                        })
                    }
                }
            }
        }
    }
    if let Some((line, col, _)) = stack.pop() {
        return Err(PddlError::Syntax {
            line,
            col,
            message: "unbalanced opening parenthesis".into(),
        });
    }
    Ok(out)
}
