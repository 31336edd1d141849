use std::ops::Range;

use super::lexer::{Tok, Token};
use super::Diagnostic;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Num(String),
    Name(String),
    Call {
        name: String,
        derivs: Vec<u8>,
        args: Vec<ExprNode>,
    },
    Vector(Vec<ExprNode>),
    Neg(Box<ExprNode>),
    Bin(BinOp, Box<ExprNode>, Box<ExprNode>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExprNode {
    pub kind: ExprKind,
    pub span: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ident {
    pub name: String,
    pub span: Range<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuncAst {
    pub name: Ident,
    pub params: Vec<Ident>,
    pub partials: Option<Vec<(Ident, ExprNode)>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SystemAst {
    pub id: Option<Ident>,
    pub description: Option<String>,
    pub parameters: Vec<Ident>,
    pub dependents: Vec<(bool, Ident)>,
    pub sources: Vec<(bool, Ident)>,
    pub functions: Vec<FuncAst>,
    pub equations: Vec<(ExprNode, Option<ExprNode>)>,
    pub leading: Vec<(Ident, Option<ExprNode>)>,
    pub assume: Vec<Ident>,
    pub ranking: Option<Ident>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurrentAst {
    pub id: Ident,
    pub system: Ident,
    pub kind: Ident,
    pub description: Option<String>,
    pub density: Option<ExprNode>,
    pub flux: Option<ExprNode>,
    pub closed: Option<Ident>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionAst {
    pub id: Ident,
    pub system: Ident,
    pub description: Option<String>,
    pub parameters: Vec<(Ident, ExprNode)>,
    pub fields: Vec<(Ident, ExprNode)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorFieldAst {
    pub id: Ident,
    pub description: Option<String>,
    pub components: Option<ExprNode>,
    pub constraint: Option<Ident>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ItemAst {
    System(SystemAst),
    Current(CurrentAst),
    Solution(SolutionAst),
    VectorField(VectorFieldAst),
}

pub struct Parser<'a> {
    text: &'a str,
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, Diagnostic>;

impl<'a> Parser<'a> {
    pub fn new(text: &'a str, toks: Vec<Token>) -> Parser<'a> {
        Parser { text, toks, pos: 0 }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> Range<usize> {
        self.toks[self.pos].span.clone()
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, msg: &str) -> PResult<T> {
        Err(Diagnostic::error(self.text, self.span(), msg))
    }

    fn expect(&mut self, tok: Tok) -> PResult<Token> {
        if *self.peek() == tok {
            Ok(self.bump())
        } else {
            self.error(&format!("expected {}, found {}", tok.describe(), self.peek().describe()))
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> PResult<Ident> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let span = self.bump().span;
                Ok(Ident { name, span })
            }
            other => self.error(&format!("expected identifier, found {}", other.describe())),
        }
    }

    /// Identifier that may join adjacent tokens with hyphens, as in `em-vacuum`.
    fn item_id(&mut self) -> PResult<Ident> {
        let mut id = self.ident()?;
        loop {
            let minus = &self.toks[self.pos];
            let next = &self.toks[(self.pos + 1).min(self.toks.len() - 1)];
            let adjacent = minus.tok == Tok::Minus
                && minus.span.start == id.span.end
                && next.span.start == minus.span.end
                && matches!(next.tok, Tok::Ident(_) | Tok::Num(_));
            if !adjacent {
                break;
            }
            self.bump();
            let t = self.bump();
            let part = match t.tok {
                Tok::Ident(s) | Tok::Num(s) => s,
                _ => unreachable!(),
            };
            id.name.push('-');
            id.name.push_str(&part);
            id.span.end = t.span.end;
        }
        Ok(id)
    }

    fn string(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(s)
            }
            other => self.error(&format!("expected string, found {}", other.describe())),
        }
    }

    pub fn document(&mut self) -> PResult<Vec<ItemAst>> {
        let mut items = Vec::new();
        while *self.peek() != Tok::Eof {
            let kw = self.ident()?;
            let item = match kw.name.as_str() {
                "system" => ItemAst::System(self.system()?),
                "current" => ItemAst::Current(self.current()?),
                "solution" => ItemAst::Solution(self.solution()?),
                "vectorfield" => ItemAst::VectorField(self.vectorfield()?),
                other => {
                    return Err(Diagnostic::error(
                        self.text,
                        kw.span,
                        &format!("expected `system`, `current`, `solution` or `vectorfield`, found `{other}`"),
                    ))
                }
            };
            items.push(item);
        }
        Ok(items)
    }

    /// Runs `body` for each `name: ... ;` section inside braces.
    fn sections(&mut self, mut body: impl FnMut(&mut Self, &Ident) -> PResult<bool>) -> PResult<()> {
        self.expect(Tok::LBrace)?;
        let mut seen: Vec<String> = Vec::new();
        while !self.eat(&Tok::RBrace) {
            let name = self.ident()?;
            if seen.contains(&name.name) {
                return Err(Diagnostic::error(self.text, name.span, &format!("duplicate section `{}`", name.name)));
            }
            self.expect(Tok::Colon)?;
            if !body(self, &name)? {
                return Err(Diagnostic::error(self.text, name.span, &format!("unknown section `{}`", name.name)));
            }
            self.expect(Tok::Semi)?;
            seen.push(name.name);
        }
        Ok(())
    }

    fn list<T>(&mut self, mut each: impl FnMut(&mut Self) -> PResult<T>) -> PResult<Vec<T>> {
        let mut out = Vec::new();
        if *self.peek() == Tok::Semi {
            return Ok(out);
        }
        loop {
            out.push(each(self)?);
            if !self.eat(&Tok::Comma) {
                return Ok(out);
            }
        }
    }

    fn decl(&mut self) -> PResult<(bool, Ident)> {
        let id = self.ident()?;
        if id.name == "vector" && matches!(self.peek(), Tok::Ident(_)) {
            return Ok((true, self.ident()?));
        }
        Ok((false, id))
    }

    fn function(&mut self) -> PResult<FuncAst> {
        let name = self.ident()?;
        self.expect(Tok::LParen)?;
        let params = self.list(|p| p.ident())?;
        self.expect(Tok::RParen)?;
        let partials = if self.eat(&Tok::LBrace) {
            let mut v = Vec::new();
            while !self.eat(&Tok::RBrace) {
                let d = self.ident()?;
                self.expect(Tok::Eq)?;
                v.push((d, self.expr()?));
                if !self.eat(&Tok::Comma) {
                    self.expect(Tok::RBrace)?;
                    break;
                }
            }
            Some(v)
        } else {
            None
        };
        Ok(FuncAst { name, params, partials })
    }

    fn system(&mut self) -> PResult<SystemAst> {
        let mut s = SystemAst {
            id: Some(self.item_id()?),
            ..Default::default()
        };
        self.sections(|p, name| {
            match name.name.as_str() {
                "description" => s.description = Some(p.string()?),
                "parameters" => s.parameters = p.list(|p| p.ident())?,
                "dependents" => s.dependents = p.list(|p| p.decl())?,
                "sources" => s.sources = p.list(|p| p.decl())?,
                "functions" => s.functions = p.list(|p| p.function())?,
                "equations" => {
                    s.equations = p.list(|p| {
                        let lhs = p.expr()?;
                        let rhs = if p.eat(&Tok::Eq) { Some(p.expr()?) } else { None };
                        Ok((lhs, rhs))
                    })?
                }
                "leading" => {
                    s.leading = p.list(|p| {
                        let j = p.ident()?;
                        let rhs = if p.eat(&Tok::Eq) { Some(p.expr()?) } else { None };
                        Ok((j, rhs))
                    })?
                }
                "assume" => s.assume = p.list(|p| p.ident())?,
                "ranking" => s.ranking = Some(p.item_id()?),
                _ => return Ok(false),
            }
            Ok(true)
        })?;
        Ok(s)
    }

    fn keyword(&mut self, kw: &str) -> PResult<()> {
        let id = self.ident()?;
        if id.name != kw {
            return Err(Diagnostic::error(self.text, id.span, &format!("expected `{kw}`, found `{}`", id.name)));
        }
        Ok(())
    }

    fn current(&mut self) -> PResult<CurrentAst> {
        let id = self.item_id()?;
        self.keyword("on")?;
        let system = self.item_id()?;
        self.keyword("kind")?;
        let kind = self.item_id()?;
        let mut c = CurrentAst {
            id,
            system,
            kind,
            description: None,
            density: None,
            flux: None,
            closed: None,
        };
        self.sections(|p, name| {
            match name.name.as_str() {
                "description" => c.description = Some(p.string()?),
                "density" => c.density = Some(p.expr()?),
                "flux" => c.flux = Some(p.expr()?),
                "closed" => c.closed = Some(p.ident()?),
                _ => return Ok(false),
            }
            Ok(true)
        })?;
        Ok(c)
    }

    fn solution(&mut self) -> PResult<SolutionAst> {
        let id = self.item_id()?;
        self.keyword("on")?;
        let system = self.item_id()?;
        let mut s = SolutionAst {
            id,
            system,
            description: None,
            parameters: Vec::new(),
            fields: Vec::new(),
        };
        let assignment = |p: &mut Self| -> PResult<(Ident, ExprNode)> {
            let name = p.ident()?;
            p.expect(Tok::Eq)?;
            Ok((name, p.expr()?))
        };
        self.sections(|p, name| {
            match name.name.as_str() {
                "description" => s.description = Some(p.string()?),
                "parameters" => s.parameters = p.list(assignment)?,
                "fields" => s.fields = p.list(assignment)?,
                _ => return Ok(false),
            }
            Ok(true)
        })?;
        Ok(s)
    }

    fn vectorfield(&mut self) -> PResult<VectorFieldAst> {
        let id = self.item_id()?;
        let mut v = VectorFieldAst {
            id,
            description: None,
            components: None,
            constraint: None,
        };
        self.sections(|p, name| {
            match name.name.as_str() {
                "description" => v.description = Some(p.string()?),
                "components" => v.components = Some(p.expr()?),
                "constraint" => v.constraint = Some(p.item_id()?),
                _ => return Ok(false),
            }
            Ok(true)
        })?;
        Ok(v)
    }

    pub fn expr(&mut self) -> PResult<ExprNode> {
        self.expr_bp(0, 0)
    }

    fn expr_bp(&mut self, min_bp: u8, depth: usize) -> PResult<ExprNode> {
        if depth > 200 {
            return self.error("expression nests too deeply");
        }
        let mut lhs = self.prefix(depth)?;
        loop {
            let (op, lbp, rbp) = match self.peek() {
                Tok::Plus => (BinOp::Add, 10, 11),
                Tok::Minus => (BinOp::Sub, 10, 11),
                Tok::Star => (BinOp::Mul, 20, 21),
                Tok::Slash => (BinOp::Div, 20, 21),
                Tok::Caret => (BinOp::Pow, 31, 30),
                _ => break,
            };
            if lbp < min_bp {
                break;
            }
            self.bump();
            let rhs = self.expr_bp(rbp, depth + 1)?;
            let span = lhs.span.start..rhs.span.end;
            lhs = ExprNode {
                kind: ExprKind::Bin(op, Box::new(lhs), Box::new(rhs)),
                span,
            };
        }
        Ok(lhs)
    }

    fn prefix(&mut self, depth: usize) -> PResult<ExprNode> {
        let start = self.span();
        match self.peek().clone() {
            Tok::Minus | Tok::Plus => {
                let neg = *self.peek() == Tok::Minus;
                self.bump();
                let inner = self.expr_bp(25, depth + 1)?;
                let span = start.start..inner.span.end;
                if neg {
                    Ok(ExprNode {
                        kind: ExprKind::Neg(Box::new(inner)),
                        span,
                    })
                } else {
                    Ok(inner)
                }
            }
            Tok::Num(n) => {
                self.bump();
                Ok(ExprNode {
                    kind: ExprKind::Num(n),
                    span: start,
                })
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr_bp(0, depth + 1)?;
                let end = self.expect(Tok::RParen)?.span.end;
                Ok(ExprNode {
                    kind: inner.kind,
                    span: start.start..end,
                })
            }
            Tok::LBracket => {
                self.bump();
                let mut items = Vec::new();
                if *self.peek() != Tok::RBracket {
                    loop {
                        items.push(self.expr_bp(0, depth + 1)?);
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                let end = self.expect(Tok::RBracket)?.span.end;
                Ok(ExprNode {
                    kind: ExprKind::Vector(items),
                    span: start.start..end,
                })
            }
            Tok::Ident(name) => {
                self.bump();
                let mut derivs = Vec::new();
                while *self.peek() == Tok::At && matches!(self.peek_at(1), Tok::Num(_)) {
                    self.bump();
                    let Tok::Num(k) = self.bump().tok else { unreachable!() };
                    match k.parse::<u8>() {
                        Ok(k) if k >= 1 => derivs.push(k),
                        _ => return Err(Diagnostic::error(self.text, self.toks[self.pos - 1].span.clone(), "bad argument index")),
                    }
                }
                if *self.peek() == Tok::LParen {
                    self.bump();
                    let mut args = Vec::new();
                    if *self.peek() != Tok::RParen {
                        loop {
                            args.push(self.expr_bp(0, depth + 1)?);
                            if !self.eat(&Tok::Comma) {
                                break;
                            }
                        }
                    }
                    let end = self.expect(Tok::RParen)?.span.end;
                    return Ok(ExprNode {
                        kind: ExprKind::Call { name, derivs, args },
                        span: start.start..end,
                    });
                }
                if !derivs.is_empty() {
                    return self.error("expected `(` after function derivative marker");
                }
                Ok(ExprNode {
                    kind: ExprKind::Name(name),
                    span: start,
                })
            }
            other => self.error(&format!("expected expression, found {}", other.describe())),
        }
    }
}
