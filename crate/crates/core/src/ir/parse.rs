//! Recursive-descent parser for the textual IR.
//!
//! The grammar is line oriented and mirrors Jimple: `:=` introduces identity
//! statements, `=` assignments, and call sites spell out the full bracketed
//! callee signature. Errors are collected per statement and parsing resumes at
//! the next statement, so a malformed file yields every syntax error at once.


use super::diag::{Diagnostic, DiagnosticKind, Locus};
use super::lexer::{lex, Tok, Token};
use super::types::*;
use super::validate::reference_diagnostics;

const MODIFIERS: &[&str] =
    &["public", "private", "protected", "final", "abstract", "synchronized", "native"];

/// Parses IR text into a program whose call sites, fields and variables all
/// resolve. Returns every syntax and reference diagnostic on failure.
pub fn parse_program(src: &str) -> Result<IrProgram, Vec<Diagnostic>> {
    let program = parse_syntax(src)?;
    let diags = reference_diagnostics(&program);
    if diags.is_empty() {
        Ok(program)
    } else {
        Err(diags)
    }
}

/// Parses IR text without checking that references resolve.
pub fn parse_syntax(src: &str) -> Result<IrProgram, Vec<Diagnostic>> {
    let (toks, diags) = lex(src);
    let mut p = Parser { toks, pos: 0, diags };
    let program = p.program();
    if p.diags.is_empty() {
        Ok(program)
    } else {
        p.diags.sort_by_key(|d| (d.locus.line, d.locus.col));
        Err(p.diags)
    }
}

/// Parses a single statement, as used in test bodies and serialized traces.
pub fn parse_statement(src: &str) -> Result<IrStatement, Diagnostic> {
    let (toks, mut diags) = lex(src);
    if let Some(d) = diags.pop() {
        return Err(d);
    }
    let mut p = Parser { toks, pos: 0, diags: Vec::new() };
    let stmt = p.statement().map_err(|()| p.diags.remove(0))?;
    p.eat(&Tok::Semi);
    if let Some(t) = p.peek() {
        return Err(Diagnostic::syntax(t.line, t.col, "trailing tokens after statement"));
    }
    Ok(stmt)
}

/// Parses `<C: R name(P,..)>` or `<C: T name>`. Method signatures come back
/// with `is_static == false`.
pub fn parse_member_signature(src: &str) -> Result<MemberSignature, Diagnostic> {
    let (toks, mut diags) = lex(src);
    if let Some(d) = diags.pop() {
        return Err(d);
    }
    let mut p = Parser { toks, pos: 0, diags: Vec::new() };
    let member = p.member_sig(false).map_err(|()| p.diags.remove(0))?;
    if let Some(t) = p.peek() {
        return Err(Diagnostic::syntax(t.line, t.col, "trailing tokens after signature"));
    }
    Ok(member)
}

type PResult<T> = Result<T, ()>;

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    diags: Vec<Diagnostic>,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn peek_tok(&self, n: usize) -> Option<&Tok> {
        self.toks.get(self.pos + n).map(|t| &t.tok)
    }

    fn peek_ident(&self, n: usize) -> Option<&str> {
        match self.peek_tok(n) {
            Some(Tok::Ident(s)) => Some(s),
            _ => None,
        }
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek_tok(0) == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.peek_ident(0) == Some(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn error<T>(&mut self, msg: impl Into<String>) -> PResult<T> {
        let (line, col) = match self.peek() {
            Some(t) => (t.line, t.col),
            None => self.toks.last().map(|t| (t.line, t.col + 1)).unwrap_or((1, 1)),
        };
        let found = match self.peek() {
            Some(t) => format!("{:?}", t.tok),
            None => "end of input".into(),
        };
        self.diags.push(Diagnostic::syntax(line, col, format!("{} (found {found})", msg.into())));
        Err(())
    }

    fn expect(&mut self, tok: Tok, what: &str) -> PResult<()> {
        if self.eat(&tok) {
            Ok(())
        } else {
            self.error(format!("expected {what}"))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek_tok(0) {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.error(format!("expected {what}")),
        }
    }

    fn type_name(&mut self) -> PResult<String> {
        let mut ty = self.ident("type name")?;
        while self.peek_tok(0) == Some(&Tok::LBracket) && self.peek_tok(1) == Some(&Tok::RBracket) {
            self.pos += 2;
            ty.push_str("[]");
        }
        Ok(ty)
    }

    fn line_of_current(&self) -> usize {
        self.peek().map(|t| t.line).unwrap_or(0)
    }

    /// Skips to the start of the next statement after an error.
    fn recover_statement(&mut self, start_line: usize) {
        while let Some(t) = self.peek() {
            match t.tok {
                Tok::Semi => {
                    self.pos += 1;
                    return;
                }
                Tok::RBrace => return,
                _ if t.line > start_line => return,
                _ => self.pos += 1,
            }
        }
    }

    fn skip_block(&mut self) {
        let mut depth = 0usize;
        while let Some(t) = self.next() {
            match t.tok {
                Tok::LBrace => depth += 1,
                Tok::RBrace => {
                    if depth <= 1 {
                        return;
                    }
                    depth -= 1;
                }
                _ => {}
            }
        }
    }

    fn program(&mut self) -> IrProgram {
        let mut program = IrProgram::default();
        while let Some(t) = self.peek().cloned() {
            match &t.tok {
                Tok::Ident(kw) if kw == "framework" => {
                    self.pos += 1;
                    if self.framework_block(&mut program.framework).is_err() {
                        self.skip_block();
                    }
                }
                Tok::Ident(kw) if kw == "class" || MODIFIERS.contains(&kw.as_str()) => {
                    while self.peek_ident(0).is_some_and(|s| MODIFIERS.contains(&s)) {
                        self.pos += 1;
                    }
                    match self.class_decl() {
                        Ok(class) => {
                            if program.classes.contains_key(&class.name) {
                                self.diags.push(Diagnostic::syntax(
                                    t.line,
                                    t.col,
                                    format!("class `{}` declared twice", class.name),
                                ));
                            } else {
                                program.classes.insert(class.name.clone(), class);
                            }
                        }
                        Err(()) => self.skip_block(),
                    }
                }
                _ => {
                    let _ = self.error::<()>("expected `framework` or `class`");
                    self.pos += 1;
                }
            }
        }
        program
    }

    fn framework_block(&mut self, fw: &mut FrameworkDecls) -> PResult<()> {
        self.expect(Tok::LBrace, "`{` after `framework`")?;
        loop {
            if self.eat(&Tok::RBrace) {
                return Ok(());
            }
            if self.peek().is_none() {
                return self.error("unterminated framework block");
            }
            let line = self.line_of_current();
            if self.framework_entry(fw).is_err() {
                self.recover_statement(line);
            }
        }
    }

    fn framework_entry(&mut self, fw: &mut FrameworkDecls) -> PResult<()> {
        let is_static = self.eat_keyword("static");
        let kw = self.ident("`class`, `method` or `field`")?;
        match kw.as_str() {
            "class" if !is_static => {
                let name = self.type_name()?;
                fw.classes.insert(name);
            }
            "method" => {
                let MemberSignature::Method(mut sig) = self.member_sig(false)? else {
                    return self.error("expected a method signature");
                };
                sig.is_static = is_static;
                fw.methods.insert(sig);
            }
            "field" if !is_static => {
                let MemberSignature::Field(f) = self.member_sig(false)? else {
                    return self.error("expected a field signature");
                };
                fw.fields.insert(f);
            }
            _ => {
                self.pos -= 1;
                return self.error("expected `class`, `method` or `field`");
            }
        }
        self.expect(Tok::Semi, "`;`")
    }

    fn class_decl(&mut self) -> PResult<IrClass> {
        if !self.eat_keyword("class") {
            return self.error("expected `class`");
        }
        let name = self.type_name()?;
        let superclass = if self.eat_keyword("extends") { Some(self.type_name()?) } else { None };
        self.expect(Tok::LBrace, "`{` after class name")?;
        let mut class = IrClass { name, superclass, fields: Vec::new(), methods: Vec::new() };
        loop {
            if self.eat(&Tok::RBrace) {
                return Ok(class);
            }
            if self.peek().is_none() {
                return self.error("unterminated class body");
            }
            let start = self.pos;
            let line = self.line_of_current();
            if self.member(&mut class).is_err() {
                // a broken method header: skip its body if one follows on this line
                self.recover_statement(line);
                if self.peek_tok(0) == Some(&Tok::LBrace) {
                    self.skip_block();
                }
                if self.pos == start {
                    self.pos += 1;
                }
            }
        }
    }

    fn member(&mut self, class: &mut IrClass) -> PResult<()> {
        while self.peek_ident(0).is_some_and(|s| MODIFIERS.contains(&s)) {
            self.pos += 1;
        }
        let is_static = self.eat_keyword("static");
        if self.eat_keyword("field") {
            let ty = self.type_name()?;
            let name = self.ident("field name")?;
            self.expect(Tok::Semi, "`;`")?;
            class.fields.push(FieldDecl { name, ty, is_static });
            return Ok(());
        }
        let header = self.peek().cloned();
        let return_type = self.type_name()?;
        let name = self.ident("method name")?;
        self.expect(Tok::LParen, "`(`")?;
        let mut params = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                params.push(self.type_name()?);
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(Tok::Comma, "`,` or `)`")?;
            }
        }
        if self.eat_keyword("throws") {
            loop {
                self.type_name()?;
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::LBrace, "`{` to open the method body")?;
        let signature = MethodSignature {
            declaring_class: class.name.clone(),
            name,
            param_types: params,
            return_type,
            is_static,
        };
        let method = self.method_body(signature)?;
        if class.methods.iter().any(|m| m.signature == method.signature) {
            let (line, col) = header.map(|t| (t.line, t.col)).unwrap_or((0, 0));
            self.diags.push(Diagnostic::new(
                DiagnosticKind::DuplicateMethod,
                format!("method {} defined twice", method.signature),
                Locus::at(line, col),
            ));
        } else {
            class.methods.push(method);
        }
        Ok(())
    }

    fn method_body(&mut self, signature: MethodSignature) -> PResult<IrMethod> {
        let mut declared: Vec<Local> = Vec::new();
        let mut body = Vec::new();
        loop {
            if self.eat(&Tok::RBrace) {
                break;
            }
            if self.peek().is_none() {
                return self.error("unterminated method body");
            }
            let line = self.line_of_current();
            match self.body_item() {
                Ok(BodyItem::Stmt(stmt)) => {
                    self.eat(&Tok::Semi);
                    body.push(stmt);
                }
                Ok(BodyItem::Local(local)) => {
                    self.eat(&Tok::Semi);
                    if !declared.iter().any(|l| l.name == local.name) {
                        declared.push(local);
                    }
                }
                Err(()) => self.recover_statement(line),
            }
        }
        let locals = infer_locals(declared, &body);
        Ok(IrMethod { signature, locals, body })
    }

    fn body_item(&mut self) -> PResult<BodyItem> {
        let is_decl = matches!(self.peek_tok(0), Some(Tok::Ident(kw)) if !is_statement_keyword(kw))
            && matches!(self.peek_tok(1), Some(Tok::Ident(_)) | Some(Tok::LBracket));
        if is_decl {
            let ty = self.type_name()?;
            let name = self.ident("local name")?;
            return Ok(BodyItem::Local(Local { name, ty }));
        }
        self.statement().map(BodyItem::Stmt)
    }
}

enum BodyItem {
    Stmt(IrStatement),
    Local(Local),
}

fn is_statement_keyword(s: &str) -> bool {
    matches!(s, "return" | "goto" | "if") || InvokeKind::from_keyword(s).is_some()
}

fn infer_locals(mut locals: Vec<Local>, body: &[IrStatement]) -> Vec<Local> {
    for stmt in body {
        if let (Some(var), Some(ty)) = (stmt.def(), stmt.defined_type()) {
            if !locals.iter().any(|l| l.name == var) {
                locals.push(Local { name: var.to_string(), ty });
            }
        }
    }
    locals
}

impl Parser {
    fn statement(&mut self) -> PResult<IrStatement> {
        let Some(first) = self.peek().cloned() else {
            return self.error("expected a statement");
        };
        let stmt_line = first.line;
        match &first.tok {
            Tok::Ident(kw) if kw == "return" => {
                self.pos += 1;
                let ends = match self.peek() {
                    None => true,
                    Some(t) => matches!(t.tok, Tok::Semi | Tok::RBrace) || t.line != stmt_line,
                };
                if ends {
                    return Ok(IrStatement::ReturnVoid);
                }
                let value = self.operand()?;
                Ok(IrStatement::Return { value })
            }
            Tok::Ident(kw) if kw == "goto" => {
                self.pos += 1;
                let target = self.ident("label")?;
                Ok(IrStatement::Goto { target })
            }
            Tok::Ident(kw) if kw == "if" => {
                self.pos += 1;
                let cond = self.ident("condition variable")?;
                if !self.eat_keyword("goto") {
                    return self.error("expected `goto`");
                }
                let target = self.ident("label")?;
                Ok(IrStatement::If { cond, target })
            }
            Tok::Ident(kw) if InvokeKind::from_keyword(kw).is_some() => {
                let call = self.invoke_expr()?;
                Ok(IrStatement::InvokeVoid { call })
            }
            Tok::Lt => {
                let field = self.field_sig()?;
                self.expect(Tok::Eq, "`=`")?;
                let src = self.operand()?;
                Ok(IrStatement::FieldStore { field, base: None, src })
            }
            Tok::Ident(name) => {
                let name = name.clone();
                match self.peek_tok(1) {
                    Some(Tok::Colon) => {
                        self.pos += 2;
                        Ok(IrStatement::Label { name })
                    }
                    Some(Tok::ColonEq) => {
                        self.pos += 2;
                        self.identity(name)
                    }
                    Some(Tok::Eq) => {
                        self.pos += 2;
                        self.assignment(name)
                    }
                    Some(Tok::Dot) => {
                        self.pos += 2;
                        let field = self.field_sig()?;
                        self.expect(Tok::Eq, "`=`")?;
                        let src = self.operand()?;
                        Ok(IrStatement::FieldStore { field, base: Some(name), src })
                    }
                    _ => {
                        self.pos += 1;
                        self.error("expected `=`, `:=`, `:` or a field access")
                    }
                }
            }
            _ => self.error("expected a statement"),
        }
    }

    fn identity(&mut self, var: String) -> PResult<IrStatement> {
        self.expect(Tok::At, "`@`")?;
        let what = self.ident("`parameterN` or `this`")?;
        self.expect(Tok::Colon, "`:`")?;
        let ty = self.type_name()?;
        if what == "this" {
            return Ok(IrStatement::IdentityThis { var, ty });
        }
        match what.strip_prefix("parameter").and_then(|n| n.parse::<usize>().ok()) {
            Some(index) => Ok(IrStatement::IdentityParam { var, index, ty }),
            None => {
                self.pos -= 3;
                self.error("expected `@parameterN` or `@this`")
            }
        }
    }

    fn assignment(&mut self, var: String) -> PResult<IrStatement> {
        match self.peek_tok(0).cloned() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let ty = self.type_name()?;
                self.expect(Tok::RParen, "`)`")?;
                let src = self.ident("cast source variable")?;
                Ok(IrStatement::AssignCast { var, ty, src })
            }
            Some(Tok::Ident(kw)) if kw == "new" => {
                self.pos += 1;
                let ty = self.type_name()?;
                Ok(IrStatement::AssignNew { var, ty })
            }
            Some(Tok::Ident(kw)) if InvokeKind::from_keyword(&kw).is_some() => {
                let call = self.invoke_expr()?;
                Ok(IrStatement::AssignInvoke { var, call })
            }
            Some(Tok::Lt) => {
                let field = self.field_sig()?;
                Ok(IrStatement::AssignFieldLoad { var, field, base: None })
            }
            Some(Tok::Ident(base)) if self.peek_tok(1) == Some(&Tok::Dot) => {
                self.pos += 2;
                let field = self.field_sig()?;
                Ok(IrStatement::AssignFieldLoad { var, field, base: Some(base) })
            }
            _ => match self.literal()? {
                Some(value) => Ok(IrStatement::AssignConst { var, value }),
                None => self.error("expected an expression"),
            },
        }
    }

    fn invoke_expr(&mut self) -> PResult<Invoke> {
        let kw = self.ident("invoke keyword")?;
        let kind = InvokeKind::from_keyword(&kw).expect("caller checked keyword");
        let receiver = if kind == InvokeKind::Static {
            None
        } else {
            let r = self.ident("receiver variable")?;
            self.expect(Tok::Dot, "`.` after receiver")?;
            Some(r)
        };
        let MemberSignature::Method(mut callee) = self.member_sig(false)? else {
            return self.error("expected a method signature");
        };
        callee.is_static = kind == InvokeKind::Static;
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                args.push(self.operand()?);
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(Tok::Comma, "`,` or `)`")?;
            }
        }
        Ok(Invoke { kind, callee, receiver, args })
    }

    fn field_sig(&mut self) -> PResult<FieldSignature> {
        match self.member_sig(false)? {
            MemberSignature::Field(f) => Ok(f),
            MemberSignature::Method(_) => self.error("expected a field signature"),
        }
    }

    fn member_sig(&mut self, is_static: bool) -> PResult<MemberSignature> {
        self.expect(Tok::Lt, "`<` to open a signature")?;
        let class = self.type_name()?;
        self.expect(Tok::Colon, "`:`")?;
        let ty = self.type_name()?;
        let name = self.ident("member name")?;
        if self.eat(&Tok::Gt) {
            return Ok(MemberSignature::Field(FieldSignature { declaring_class: class, field_type: ty, name }));
        }
        self.expect(Tok::LParen, "`(` or `>`")?;
        let mut params = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                params.push(self.type_name()?);
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(Tok::Comma, "`,` or `)`")?;
            }
        }
        self.expect(Tok::Gt, "`>` to close the signature")?;
        Ok(MemberSignature::Method(MethodSignature {
            declaring_class: class,
            name,
            param_types: params,
            return_type: ty,
            is_static,
        }))
    }

    fn operand(&mut self) -> PResult<Operand> {
        if let Some(v) = self.literal()? {
            return Ok(Operand::Const(v));
        }
        Ok(Operand::Var(self.ident("operand")?))
    }

    /// Parses a literal if one starts here.
    fn literal(&mut self) -> PResult<Option<Value>> {
        let v = match self.peek_tok(0).cloned() {
            Some(Tok::Int(n)) => match i32::try_from(n) {
                Ok(n) => Value::Int(n),
                Err(_) => return self.error("int literal out of range (use an `L` suffix)"),
            },
            Some(Tok::Long(n)) => Value::Long(n),
            Some(Tok::Double(d)) => Value::Double(d),
            Some(Tok::Str(s)) => Value::Str(s),
            Some(Tok::Ident(s)) => match s.as_str() {
                "null" => Value::Null,
                "true" => Value::Bool(true),
                "false" => Value::Bool(false),
                "NaN" => Value::Double(f64::NAN),
                "Infinity" => Value::Double(f64::INFINITY),
                _ if self.peek_tok(1) == Some(&Tok::LBracket)
                    && self.peek_tok(2) == Some(&Tok::RBracket)
                    && self.peek_tok(3) == Some(&Tok::LBrace) =>
                {
                    self.pos += 4;
                    let mut items = Vec::new();
                    if !self.eat(&Tok::RBrace) {
                        loop {
                            match self.literal()? {
                                Some(v) => items.push(v),
                                None => return self.error("expected an array element literal"),
                            }
                            if self.eat(&Tok::RBrace) {
                                break;
                            }
                            self.expect(Tok::Comma, "`,` or `}`")?;
                        }
                    }
                    return Ok(Some(Value::Array { elem_type: s, items }));
                }
                _ => return Ok(None),
            },
            _ => return Ok(None),
        };
        self.pos += 1;
        Ok(Some(v))
    }
}
