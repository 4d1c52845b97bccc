//! A small s-expression constraint language for floating-point problems.
//!
//! Commands: `(declare-fp name eb sb)`, `(declare-bv name width)`,
//! `(assert expr)`, `(check)`, `(eval expr ((var value) ...))`. Operator
//! names mirror SMT-LIB FP where the concept exists; literals are written
//! `(fp <format> <decimal>)` with named formats or an eb/sb pair, and the
//! special values use the SMT-LIB `(_ +oo eb sb)` family.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::Num;
use thiserror::Error;

use crate::backend::Query;
use crate::bitvec::expr::{self, BvExpr, BvOp};
use crate::bitvec::{eval as bv_eval, BvValue, Context, Env};
use crate::fpformat::{
    formats, fp_as_ieeebv, fp_from_ieeebv, mk_literal, mk_special, FpBits, FpFormat, RoundingMode,
    SpecialKind,
};
use crate::fpops;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{line}:{col}: {message}")]
pub struct ScriptError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

fn err<T>(line: u32, col: u32, message: impl Into<String>) -> Result<T, ScriptError> {
    Err(ScriptError {
        line,
        col,
        message: message.into(),
    })
}

/// Operators the surface syntax accepts, kept for error messages.
pub const SUPPORTED_OPERATORS: &[&str] = &[
    "fp.abs",
    "fp.neg",
    "fp.add",
    "fp.sub",
    "fp.mul",
    "fp.div",
    "fp.fma",
    "fp.sqrt",
    "fp.roundToIntegral",
    "fp.lt",
    "fp.leq",
    "fp.gt",
    "fp.geq",
    "fp.eq",
    "fp.isNormal",
    "fp.isSubnormal",
    "fp.isZero",
    "fp.isInfinite",
    "fp.isNaN",
    "fp.isNegative",
    "fp.isPositive",
    "fp.to_sbv",
    "fp.to_ubv",
    "to_fp",
    "to_fp_unsigned",
    "fp.as_ieeebv",
    "fp",
    "=",
    "not",
    "and",
    "or",
    "xor",
    "ite",
    "concat",
    "extract",
    "zero_extend",
    "sign_extend",
    "bvnot",
    "bvneg",
    "bvand",
    "bvor",
    "bvxor",
    "bvadd",
    "bvsub",
    "bvmul",
    "bvudiv",
    "bvurem",
    "bvshl",
    "bvlshr",
    "bvashr",
    "bvult",
    "bvule",
    "bvslt",
    "bvsle",
    "bvredor",
];

/// Operators from the SMT FP theory that this tool deliberately leaves out.
pub const UNSUPPORTED_OPERATORS: &[&str] =
    &["fp.rem", "fp.min", "fp.max", "fp.to_real", "to_fp_real"];

#[derive(Debug, Clone)]
pub enum SExpr {
    Atom {
        text: String,
        line: u32,
        col: u32,
    },
    List {
        items: Vec<SExpr>,
        line: u32,
        col: u32,
    },
}

/// Structural equality; source positions do not participate.
impl PartialEq for SExpr {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (SExpr::Atom { text: a, .. }, SExpr::Atom { text: b, .. }) => a == b,
            (SExpr::List { items: a, .. }, SExpr::List { items: b, .. }) => a == b,
            _ => false,
        }
    }
}

impl Eq for SExpr {}

impl SExpr {
    pub fn pos(&self) -> (u32, u32) {
        match self {
            SExpr::Atom { line, col, .. } | SExpr::List { line, col, .. } => (*line, *col),
        }
    }

    fn atom(&self) -> Option<&str> {
        match self {
            SExpr::Atom { text, .. } => Some(text),
            _ => None,
        }
    }
}

impl fmt::Display for SExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SExpr::Atom { text, .. } => f.write_str(text),
            SExpr::List { items, .. } => {
                f.write_str("(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{}", item)?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    DeclareFp {
        name: String,
        eb: u32,
        sb: u32,
    },
    DeclareBv {
        name: String,
        width: u32,
    },
    Assert(SExpr),
    Check,
    Eval {
        expr: SExpr,
        bindings: Vec<(String, SExpr)>,
    },
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::DeclareFp { name, eb, sb } => {
                write!(f, "(declare-fp {} {} {})", name, eb, sb)
            }
            Command::DeclareBv { name, width } => write!(f, "(declare-bv {} {})", name, width),
            Command::Assert(e) => write!(f, "(assert {})", e),
            Command::Check => write!(f, "(check)"),
            Command::Eval { expr, bindings } => {
                write!(f, "(eval {}", expr)?;
                if !bindings.is_empty() {
                    write!(f, " (")?;
                    for (i, (name, v)) in bindings.iter().enumerate() {
                        if i > 0 {
                            write!(f, " ")?;
                        }
                        write!(f, "({} {})", name, v)?;
                    }
                    write!(f, ")")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Script {
    pub commands: Vec<Command>,
}

impl fmt::Display for Script {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for cmd in &self.commands {
            writeln!(f, "{}", cmd)?;
        }
        Ok(())
    }
}

struct Lexer<'a> {
    src: &'a str,
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    line: u32,
    col: u32,
}

#[derive(Debug, Clone)]
enum Token {
    Open(u32, u32),
    Close(u32, u32),
    Atom(String, u32, u32),
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src,
            chars: src.char_indices().peekable(),
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> Option<(usize, char)> {
        let next = self.chars.next();
        if let Some((_, c)) = next {
            if c == '\n' {
                self.line += 1;
                self.col = 1;
            } else {
                self.col += 1;
            }
        }
        next
    }

    fn tokens(mut self) -> Result<Vec<Token>, ScriptError> {
        let mut out = Vec::new();
        while let Some(&(start, c)) = self.chars.peek() {
            match c {
                ';' => {
                    while let Some(&(_, c)) = self.chars.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                c if c.is_whitespace() => {
                    self.bump();
                }
                '(' => {
                    out.push(Token::Open(self.line, self.col));
                    self.bump();
                }
                ')' => {
                    out.push(Token::Close(self.line, self.col));
                    self.bump();
                }
                _ => {
                    let (line, col) = (self.line, self.col);
                    let mut end = start;
                    while let Some(&(i, c)) = self.chars.peek() {
                        if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                            break;
                        }
                        end = i + c.len_utf8();
                        self.bump();
                    }
                    out.push(Token::Atom(self.src[start..end].to_string(), line, col));
                }
            }
        }
        Ok(out)
    }
}

fn parse_sexprs(text: &str) -> Result<Vec<SExpr>, ScriptError> {
    let tokens = Lexer::new(text).tokens()?;
    let mut stack: Vec<(Vec<SExpr>, u32, u32)> = Vec::new();
    let mut top: Vec<SExpr> = Vec::new();
    for token in tokens {
        match token {
            Token::Open(line, col) => stack.push((Vec::new(), line, col)),
            Token::Close(line, col) => match stack.pop() {
                Some((items, l, c)) => {
                    let list = SExpr::List {
                        items,
                        line: l,
                        col: c,
                    };
                    match stack.last_mut() {
                        Some((parent, _, _)) => parent.push(list),
                        None => top.push(list),
                    }
                }
                None => return err(line, col, "unbalanced `)`"),
            },
            Token::Atom(text, line, col) => {
                let atom = SExpr::Atom { text, line, col };
                match stack.last_mut() {
                    Some((parent, _, _)) => parent.push(atom),
                    None => top.push(atom),
                }
            }
        }
    }
    if let Some((_, line, col)) = stack.last() {
        return err(*line, *col, "unbalanced `(`: missing closing parenthesis");
    }
    Ok(top)
}

fn parse_u32(e: &SExpr, what: &str) -> Result<u32, ScriptError> {
    let (line, col) = e.pos();
    match e.atom().and_then(|a| a.parse::<u32>().ok()) {
        Some(v) => Ok(v),
        None => err(
            line,
            col,
            format!("expected {} (a number), got `{}`", what, e),
        ),
    }
}

fn ident(e: &SExpr) -> Result<String, ScriptError> {
    let (line, col) = e.pos();
    match e.atom() {
        Some(a) if !a.is_empty() && !a.starts_with('#') && a.parse::<u64>().is_err() => {
            Ok(a.to_string())
        }
        _ => err(line, col, format!("expected an identifier, got `{}`", e)),
    }
}

/// Parse script text into commands. Syntax errors carry line and column.
pub fn parse_script(text: &str) -> Result<Script, ScriptError> {
    let forms = parse_sexprs(text)?;
    let mut commands = Vec::new();
    for form in forms {
        let (line, col) = form.pos();
        let items = match &form {
            SExpr::List { items, .. } => items,
            SExpr::Atom { .. } => {
                return err(
                    line,
                    col,
                    format!("expected a command list, got `{}`", form),
                )
            }
        };
        let head = match items.first().and_then(|h| h.atom()) {
            Some(h) => h,
            None => return err(line, col, "empty command"),
        };
        let cmd = match head {
            "declare-fp" => {
                if items.len() != 4 {
                    return err(line, col, "usage: (declare-fp name eb sb)");
                }
                Command::DeclareFp {
                    name: ident(&items[1])?,
                    eb: parse_u32(&items[2], "exponent bits")?,
                    sb: parse_u32(&items[3], "significand bits")?,
                }
            }
            "declare-bv" => {
                if items.len() != 3 {
                    return err(line, col, "usage: (declare-bv name width)");
                }
                Command::DeclareBv {
                    name: ident(&items[1])?,
                    width: parse_u32(&items[2], "width")?,
                }
            }
            "assert" => {
                if items.len() != 2 {
                    return err(line, col, "usage: (assert expr)");
                }
                Command::Assert(items[1].clone())
            }
            "check" => {
                if items.len() != 1 {
                    return err(line, col, "usage: (check)");
                }
                Command::Check
            }
            "eval" => {
                if items.len() != 2 && items.len() != 3 {
                    return err(line, col, "usage: (eval expr [((var value) ...)])");
                }
                let mut bindings = Vec::new();
                if items.len() == 3 {
                    let SExpr::List { items: pairs, .. } = &items[2] else {
                        return err(line, col, "eval bindings must be a list of (var value)");
                    };
                    for pair in pairs {
                        let SExpr::List { items: kv, .. } = pair else {
                            return err(line, col, "eval bindings must be (var value) pairs");
                        };
                        if kv.len() != 2 {
                            return err(line, col, "eval bindings must be (var value) pairs");
                        }
                        bindings.push((ident(&kv[0])?, kv[1].clone()));
                    }
                }
                Command::Eval {
                    expr: items[1].clone(),
                    bindings,
                }
            }
            other => return err(
                line,
                col,
                format!(
                    "unknown command `{}` (expected declare-fp, declare-bv, assert, check, eval)",
                    other
                ),
            ),
        };
        commands.push(cmd);
    }
    Ok(Script { commands })
}

/// A sorted value during elaboration.
#[derive(Debug, Clone)]
pub enum Value {
    Fp(FpBits),
    Bv(BvExpr),
}

impl Value {
    pub fn bits(&self) -> BvExpr {
        match self {
            Value::Fp(x) => fp_as_ieeebv(x),
            Value::Bv(e) => e.clone(),
        }
    }

    pub fn fp_format(&self) -> Option<FpFormat> {
        match self {
            Value::Fp(x) => Some(x.format()),
            Value::Bv(_) => None,
        }
    }
}

/// The result of type-checking and blasting a script.
#[derive(Debug)]
pub struct Elaboration {
    pub query: Query,
    /// Declared floating-point variables, in declaration order.
    pub fp_vars: Vec<(String, FpFormat)>,
    /// Declared raw bit-vector variables, in declaration order.
    pub bv_vars: Vec<(String, u32)>,
    pub has_check: bool,
    /// Evaluated `(eval ...)` results, rendered with their source text.
    pub evals: Vec<(String, Value, BvValue)>,
    pub warnings: Vec<String>,
}

struct Elaborator {
    ctx: Context,
    sorts: HashMap<String, Option<FpFormat>>, // None: raw bit-vector
    query: Query,
    fp_vars: Vec<(String, FpFormat)>,
    bv_vars: Vec<(String, u32)>,
    warnings: Vec<String>,
}

impl Elaborator {
    fn new() -> Self {
        Elaborator {
            ctx: Context::new(),
            sorts: HashMap::new(),
            query: Query::new(),
            fp_vars: Vec::new(),
            bv_vars: Vec::new(),
            warnings: Vec::new(),
        }
    }

    fn lookup(&mut self, name: &str, line: u32, col: u32) -> Result<Value, ScriptError> {
        match self.sorts.get(name) {
            None => err(line, col, format!("`{}` is not declared", name)),
            Some(Some(format)) => {
                let bits = self
                    .ctx
                    .mk_var(name, format.total_width())
                    .expect("declared variable");
                Ok(Value::Fp(fp_from_ieeebv(&bits, *format).unwrap()))
            }
            Some(None) => {
                let width = self.ctx.width_of(name).expect("declared variable");
                Ok(Value::Bv(self.ctx.mk_var(name, width).unwrap()))
            }
        }
    }

    fn rounding_mode(&self, e: &SExpr) -> Result<RoundingMode, ScriptError> {
        let (line, col) = e.pos();
        match e.atom().and_then(RoundingMode::from_name) {
            Some(rm) => Ok(rm),
            None => err(
                line,
                col,
                format!(
                    "expected a rounding mode (RNE RNA RTP RTN RTZ), got `{}`",
                    e
                ),
            ),
        }
    }

    fn format_from(&self, eb: &SExpr, sb: &SExpr) -> Result<FpFormat, ScriptError> {
        let (line, col) = eb.pos();
        let eb = parse_u32(eb, "exponent bits")?;
        let sb = parse_u32(sb, "significand bits")?;
        FpFormat::new(eb, sb).map_err(|e| ScriptError {
            line,
            col,
            message: e.to_string(),
        })
    }

    fn want_fp(&mut self, e: &SExpr) -> Result<FpBits, ScriptError> {
        let (line, col) = e.pos();
        match self.elaborate_expr(e)? {
            Value::Fp(x) => Ok(x),
            Value::Bv(_) => err(
                line,
                col,
                format!("expected a floating-point term: `{}`", e),
            ),
        }
    }

    fn want_bv(&mut self, e: &SExpr) -> Result<BvExpr, ScriptError> {
        let (line, col) = e.pos();
        match self.elaborate_expr(e)? {
            Value::Bv(x) => Ok(x),
            Value::Fp(_) => err(
                line,
                col,
                format!(
                    "expected a bit-vector term, got a floating-point one: `{}`",
                    e
                ),
            ),
        }
    }

    fn want_fp_pair(&mut self, a: &SExpr, b: &SExpr) -> Result<(FpBits, FpBits), ScriptError> {
        let x = self.want_fp(a)?;
        let y = self.want_fp(b)?;
        if x.format() != y.format() {
            let (line, col) = b.pos();
            return err(
                line,
                col,
                format!("operand formats differ: {} vs {}", x.format(), y.format()),
            );
        }
        Ok((x, y))
    }

    fn fp_op_err(&self, at: (u32, u32), e: fpops::FpOpError) -> ScriptError {
        ScriptError {
            line: at.0,
            col: at.1,
            message: e.to_string(),
        }
    }

    fn elaborate_expr(&mut self, e: &SExpr) -> Result<Value, ScriptError> {
        let (line, col) = e.pos();
        match e {
            SExpr::Atom { text, .. } => self.elaborate_atom(text, line, col),
            SExpr::List { items, .. } => {
                if items.is_empty() {
                    return err(line, col, "empty expression");
                }
                match items[0].atom() {
                    Some(head) => self.elaborate_application(head, items, line, col),
                    None => {
                        // Indexed operator: ((_ name idx...) args...)
                        let SExpr::List { items: inner, .. } = &items[0] else {
                            return err(line, col, "expected an operator");
                        };
                        self.elaborate_indexed(inner, &items[1..], line, col)
                    }
                }
            }
        }
    }

    fn elaborate_atom(&mut self, text: &str, line: u32, col: u32) -> Result<Value, ScriptError> {
        if text == "true" {
            return Ok(Value::Bv(expr::cst(1, 1)));
        }
        if text == "false" {
            return Ok(Value::Bv(expr::cst(1, 0)));
        }
        if let Some(b) = text.strip_prefix("#b") {
            return match BigUint::from_str_radix(b, 2) {
                Ok(v) => Ok(Value::Bv(expr::mk_const(b.len() as u32, v).map_err(
                    |e| ScriptError {
                        line,
                        col,
                        message: e.to_string(),
                    },
                )?)),
                Err(_) => err(line, col, format!("bad binary literal `{}`", text)),
            };
        }
        if let Some(h) = text.strip_prefix("#x") {
            return match BigUint::from_str_radix(h, 16) {
                Ok(v) => Ok(Value::Bv(expr::mk_const(4 * h.len() as u32, v).map_err(
                    |e| ScriptError {
                        line,
                        col,
                        message: e.to_string(),
                    },
                )?)),
                Err(_) => err(line, col, format!("bad hex literal `{}`", text)),
            };
        }
        if RoundingMode::from_name(text).is_some() {
            return err(
                line,
                col,
                format!("rounding mode `{}` used where a value is expected", text),
            );
        }
        if self.sorts.contains_key(text) {
            return self.lookup(text, line, col);
        }
        err(line, col, format!("`{}` is not declared", text))
    }

    fn elaborate_application(
        &mut self,
        head: &str,
        items: &[SExpr],
        line: u32,
        col: u32,
    ) -> Result<Value, ScriptError> {
        let args = &items[1..];
        let arity = |n: usize| -> Result<(), ScriptError> {
            if args.len() != n {
                err(
                    line,
                    col,
                    format!("`{}` expects {} argument(s), got {}", head, n, args.len()),
                )
            } else {
                Ok(())
            }
        };
        if UNSUPPORTED_OPERATORS.contains(&head) {
            return err(line, col, format!("unsupported operator {}", head));
        }
        if head == "_" {
            // An indexed constant such as (_ +oo eb sb).
            return self.elaborate_indexed(items, &[], line, col);
        }
        match head {
            "fp" => {
                // (fp <named-format> <literal>) or (fp <eb> <sb> <literal>)
                let (format, lit) = match args.len() {
                    2 => {
                        let (l, c) = args[0].pos();
                        let name = args[0].atom().unwrap_or("");
                        match formats::by_name(name) {
                            Some(f) => (f, &args[1]),
                            None => {
                                return err(
                                    l,
                                    c,
                                    format!("unknown format `{}` (fp8 fp16 fp32 fp64 fp128)", name),
                                )
                            }
                        }
                    }
                    3 => (self.format_from(&args[0], &args[1])?, &args[2]),
                    _ => return err(line, col, "usage: (fp <format> <literal>)"),
                };
                let (l, c) = lit.pos();
                let text = lit.atom().unwrap_or("");
                // Literals round like C constants: to nearest, ties to even.
                match mk_literal(format, text, RoundingMode::Rne) {
                    Ok(v) => Ok(Value::Fp(v)),
                    Err(e) => err(l, c, e.to_string()),
                }
            }
            "fp.abs" => {
                arity(1)?;
                Ok(Value::Fp(fpops::fp_abs(&self.want_fp(&args[0])?)))
            }
            "fp.neg" => {
                arity(1)?;
                Ok(Value::Fp(fpops::fp_neg(&self.want_fp(&args[0])?)))
            }
            "fp.add" | "fp.sub" | "fp.mul" | "fp.div" => {
                arity(3)?;
                let rm = self.rounding_mode(&args[0])?;
                let (x, y) = self.want_fp_pair(&args[1], &args[2])?;
                let result = match head {
                    "fp.add" => fpops::fp_add(rm, &x, &y),
                    "fp.sub" => fpops::fp_sub(rm, &x, &y),
                    "fp.mul" => fpops::fp_mul(rm, &x, &y),
                    _ => fpops::fp_div(rm, &x, &y),
                };
                result
                    .map(Value::Fp)
                    .map_err(|e| self.fp_op_err((line, col), e))
            }
            "fp.fma" => {
                arity(4)?;
                let rm = self.rounding_mode(&args[0])?;
                let (x, y) = self.want_fp_pair(&args[1], &args[2])?;
                let z = self.want_fp(&args[3])?;
                fpops::fp_fma(rm, &x, &y, &z)
                    .map(Value::Fp)
                    .map_err(|e| self.fp_op_err((line, col), e))
            }
            "fp.sqrt" => {
                arity(2)?;
                let rm = self.rounding_mode(&args[0])?;
                Ok(Value::Fp(fpops::fp_sqrt(rm, &self.want_fp(&args[1])?)))
            }
            "fp.roundToIntegral" => {
                arity(2)?;
                let rm = self.rounding_mode(&args[0])?;
                Ok(Value::Fp(fpops::fp_round_to_integral(
                    rm,
                    &self.want_fp(&args[1])?,
                )))
            }
            "fp.lt" | "fp.leq" | "fp.gt" | "fp.geq" | "fp.eq" => {
                arity(2)?;
                let kind = match head {
                    "fp.lt" => fpops::FpCmpKind::Lt,
                    "fp.leq" => fpops::FpCmpKind::Le,
                    "fp.gt" => fpops::FpCmpKind::Gt,
                    "fp.geq" => fpops::FpCmpKind::Ge,
                    _ => fpops::FpCmpKind::Eq,
                };
                let (x, y) = self.want_fp_pair(&args[0], &args[1])?;
                fpops::fp_compare(kind, &x, &y)
                    .map(Value::Bv)
                    .map_err(|e| self.fp_op_err((line, col), e))
            }
            "fp.isNormal" | "fp.isSubnormal" | "fp.isZero" | "fp.isInfinite" | "fp.isNaN"
            | "fp.isNegative" | "fp.isPositive" => {
                arity(1)?;
                let kind = match head {
                    "fp.isNormal" => fpops::FpClassKind::Normal,
                    "fp.isSubnormal" => fpops::FpClassKind::Subnormal,
                    "fp.isZero" => fpops::FpClassKind::Zero,
                    "fp.isInfinite" => fpops::FpClassKind::Inf,
                    "fp.isNaN" => fpops::FpClassKind::Nan,
                    "fp.isNegative" => fpops::FpClassKind::Negative,
                    _ => fpops::FpClassKind::Positive,
                };
                Ok(Value::Bv(fpops::fp_is(kind, &self.want_fp(&args[0])?)))
            }
            "fp.as_ieeebv" => {
                arity(1)?;
                Ok(Value::Bv(fp_as_ieeebv(&self.want_fp(&args[0])?)))
            }
            "=" => {
                arity(2)?;
                // Structural equality on the underlying bits, for both sorts.
                let a = self.elaborate_expr(&args[0])?.bits();
                let b = self.elaborate_expr(&args[1])?.bits();
                self.bv2(expr::eq(&a, &b), line, col)
            }
            "not" | "bvnot" => {
                arity(1)?;
                let a = self.want_bv(&args[0])?;
                self.bv2(expr::not(&a), line, col)
            }
            "bvneg" => {
                arity(1)?;
                let a = self.want_bv(&args[0])?;
                self.bv2(expr::neg(&a), line, col)
            }
            "bvredor" => {
                arity(1)?;
                let a = self.want_bv(&args[0])?;
                self.bv2(expr::redor(&a), line, col)
            }
            "and" | "or" | "xor" | "bvand" | "bvor" | "bvxor" | "bvadd" | "bvsub" | "bvmul"
            | "bvudiv" | "bvurem" | "bvshl" | "bvlshr" | "bvashr" | "bvult" | "bvule" | "bvslt"
            | "bvsle" | "concat" => {
                arity(2)?;
                let op = match head {
                    "and" | "bvand" => BvOp::And,
                    "or" | "bvor" => BvOp::Or,
                    "xor" | "bvxor" => BvOp::Xor,
                    "bvadd" => BvOp::Add,
                    "bvsub" => BvOp::Sub,
                    "bvmul" => BvOp::Mul,
                    "bvudiv" => BvOp::Udiv,
                    "bvurem" => BvOp::Urem,
                    "bvshl" => BvOp::Shl,
                    "bvlshr" => BvOp::Lshr,
                    "bvashr" => BvOp::Ashr,
                    "bvult" => BvOp::Ult,
                    "bvule" => BvOp::Ule,
                    "bvslt" => BvOp::Slt,
                    "bvsle" => BvOp::Sle,
                    _ => BvOp::Concat,
                };
                let a = self.want_bv(&args[0])?;
                let b = self.want_bv(&args[1])?;
                self.bv2(expr::apply(op, &[a, b]), line, col)
            }
            "ite" => {
                arity(3)?;
                let c = self.want_bv(&args[0])?;
                let t = self.elaborate_expr(&args[1])?;
                let e2 = self.elaborate_expr(&args[2])?;
                match (t, e2) {
                    (Value::Fp(t), Value::Fp(e2)) if t.format() == e2.format() => {
                        let format = t.format();
                        let bits =
                            expr::ite(&c, &fp_as_ieeebv(&t), &fp_as_ieeebv(&e2)).map_err(|er| {
                                ScriptError {
                                    line,
                                    col,
                                    message: er.to_string(),
                                }
                            })?;
                        Ok(Value::Fp(fp_from_ieeebv(&bits, format).unwrap()))
                    }
                    (Value::Bv(t), Value::Bv(e2)) => self.bv2(expr::ite(&c, &t, &e2), line, col),
                    _ => err(line, col, "ite branches must have the same sort"),
                }
            }
            other => err(
                line,
                col,
                format!(
                    "unknown operator `{}`; supported operators: {}",
                    other,
                    SUPPORTED_OPERATORS.join(" ")
                ),
            ),
        }
    }

    fn bv2(
        &self,
        r: Result<BvExpr, crate::bitvec::BvError>,
        line: u32,
        col: u32,
    ) -> Result<Value, ScriptError> {
        r.map(Value::Bv).map_err(|e| ScriptError {
            line,
            col,
            message: e.to_string(),
        })
    }

    fn elaborate_indexed(
        &mut self,
        inner: &[SExpr],
        args: &[SExpr],
        line: u32,
        col: u32,
    ) -> Result<Value, ScriptError> {
        if inner.is_empty() || inner[0].atom() != Some("_") {
            return err(
                line,
                col,
                "expected an indexed operator ((_ name idx ...) ...)",
            );
        }
        let name = match inner.get(1).and_then(|e| e.atom()) {
            Some(n) => n,
            None => return err(line, col, "expected an operator name after `_`"),
        };
        match name {
            // Special values as zero-argument indexed constants.
            "+oo" | "-oo" | "NaN" | "+zero" | "-zero" => {
                if inner.len() != 4 || !args.is_empty() {
                    return err(line, col, format!("usage: (_ {} eb sb)", name));
                }
                let format = self.format_from(&inner[2], &inner[3])?;
                let kind = match name {
                    "+oo" => SpecialKind::PosInf,
                    "-oo" => SpecialKind::NegInf,
                    "NaN" => SpecialKind::Nan,
                    "+zero" => SpecialKind::PosZero,
                    _ => SpecialKind::NegZero,
                };
                Ok(Value::Fp(mk_special(format, kind)))
            }
            "extract" => {
                if inner.len() != 4 || args.len() != 1 {
                    return err(line, col, "usage: ((_ extract hi lo) x)");
                }
                let hi = parse_u32(&inner[2], "hi")?;
                let lo = parse_u32(&inner[3], "lo")?;
                let a = self.want_bv(&args[0])?;
                self.bv2(expr::extract(&a, hi, lo), line, col)
            }
            "zero_extend" | "sign_extend" => {
                if inner.len() != 3 || args.len() != 1 {
                    return err(line, col, format!("usage: ((_ {} n) x)", name));
                }
                let n = parse_u32(&inner[2], "extension amount")?;
                let a = self.want_bv(&args[0])?;
                let r = if name == "zero_extend" {
                    expr::zero_extend(&a, n)
                } else {
                    expr::sign_extend(&a, n)
                };
                self.bv2(r, line, col)
            }
            "bv" => err(
                line,
                col,
                "write plain bit-vector constants as #b or #x literals",
            ),
            "to_fp" | "to_fp_unsigned" => {
                if inner.len() != 4 {
                    return err(line, col, format!("usage: ((_ {} eb sb) [rm] x)", name));
                }
                let format = self.format_from(&inner[2], &inner[3])?;
                match args.len() {
                    // Reinterpret a raw IEEE bit-vector.
                    1 if name == "to_fp" => {
                        let a = self.want_bv(&args[0])?;
                        let (l, c) = args[0].pos();
                        fp_from_ieeebv(&a, format)
                            .map(Value::Fp)
                            .map_err(|e| ScriptError {
                                line: l,
                                col: c,
                                message: e.to_string(),
                            })
                    }
                    // With a rounding mode: convert from fp or from an integer.
                    2 => {
                        let rm = self.rounding_mode(&args[0])?;
                        match self.elaborate_expr(&args[1])? {
                            Value::Fp(x) if name == "to_fp" => {
                                Ok(Value::Fp(fpops::fp_to_fp(&x, format, rm)))
                            }
                            Value::Fp(_) => err(
                                line,
                                col,
                                "to_fp_unsigned applies to bit-vectors; use to_fp for floats",
                            ),
                            Value::Bv(bits) => Ok(Value::Fp(fpops::sbv_to_fp(
                                &bits,
                                name == "to_fp",
                                format,
                                rm,
                            ))),
                        }
                    }
                    _ => err(line, col, format!("usage: ((_ {} eb sb) [rm] x)", name)),
                }
            }
            "fp.to_sbv" | "fp.to_ubv" => {
                if inner.len() != 3 {
                    return err(line, col, format!("usage: ((_ {} w) rm x)", name));
                }
                let width = parse_u32(&inner[2], "target width")?;
                if width == 0 {
                    return err(line, col, "conversion width must be at least 1");
                }
                // An rm token is accepted for SMT-LIB compatibility but the
                // conversion always truncates toward zero.
                let x = match args.len() {
                    1 => self.want_fp(&args[0])?,
                    2 => {
                        let rm = self.rounding_mode(&args[0])?;
                        if rm != RoundingMode::Rtz {
                            self.warnings.push(format!(
                                "{}:{}: {} ignores the rounding mode and truncates toward zero",
                                line, col, name
                            ));
                        }
                        self.want_fp(&args[1])?
                    }
                    _ => return err(line, col, format!("usage: ((_ {} w) rm x)", name)),
                };
                let r = if name == "fp.to_sbv" {
                    fpops::fp_to_sbv(&mut self.ctx, &x, width)
                } else {
                    fpops::fp_to_ubv(&mut self.ctx, &x, width)
                };
                r.map(Value::Bv).map_err(|e| self.fp_op_err((line, col), e))
            }
            other => err(line, col, format!("unknown indexed operator `{}`", other)),
        }
    }
}

/// Type-check and blast a parsed script into a query plus evaluation
/// results.
pub fn elaborate(script: &Script) -> Result<Elaboration, ScriptError> {
    let mut el = Elaborator::new();
    let mut has_check = false;
    let mut evals = Vec::new();

    for cmd in &script.commands {
        match cmd {
            Command::DeclareFp { name, eb, sb } => {
                let format = FpFormat::new(*eb, *sb).map_err(|e| ScriptError {
                    line: 0,
                    col: 0,
                    message: format!("declare-fp {}: {}", name, e),
                })?;
                el.ctx
                    .mk_var(name, format.total_width())
                    .map_err(|e| ScriptError {
                        line: 0,
                        col: 0,
                        message: format!("declare-fp {}: {}", name, e),
                    })?;
                el.sorts.insert(name.clone(), Some(format));
                el.query.declare(name, format.total_width());
                el.fp_vars.push((name.clone(), format));
            }
            Command::DeclareBv { name, width } => {
                el.ctx.mk_var(name, *width).map_err(|e| ScriptError {
                    line: 0,
                    col: 0,
                    message: format!("declare-bv {}: {}", name, e),
                })?;
                el.sorts.insert(name.clone(), None);
                el.query.declare(name, *width);
                el.bv_vars.push((name.clone(), *width));
            }
            Command::Assert(e) => {
                let (line, col) = e.pos();
                let v = el.elaborate_expr(e)?;
                let bits = v.bits();
                if bits.width() != 1 {
                    return err(
                        line,
                        col,
                        format!("assertion must have width 1, got {}", bits.width()),
                    );
                }
                el.query.assert(bits).map_err(|er| ScriptError {
                    line,
                    col,
                    message: er.to_string(),
                })?;
            }
            Command::Check => has_check = true,
            Command::Eval { expr: e, bindings } => {
                let (line, col) = e.pos();
                let v = el.elaborate_expr(e)?;
                let mut env = Env::new();
                for (name, value_expr) in bindings {
                    let bound = el.elaborate_expr(value_expr)?;
                    let bits = bound.bits();
                    let Some(c) = bits.as_const() else {
                        let (l, c2) = value_expr.pos();
                        return err(l, c2, "eval bindings must be constant values");
                    };
                    env.insert(name.clone(), BvValue::new(bits.width(), c.clone()));
                }
                let result = bv_eval(&v.bits(), &env).map_err(|er| ScriptError {
                    line,
                    col,
                    message: er.to_string(),
                })?;
                evals.push((e.to_string(), v, result));
            }
        }
    }

    Ok(Elaboration {
        query: el.query,
        fp_vars: el.fp_vars,
        bv_vars: el.bv_vars,
        has_check,
        evals,
        warnings: el.warnings,
    })
}
