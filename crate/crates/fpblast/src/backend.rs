//! Serialization of blasted constraints to SMT-LIB2 QF_BV and DIMACS CNF,
//! and satisfiability dispatch to the internal brute-forcer or external
//! solver processes.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_traits::Num;
use thiserror::Error;

use crate::bitvec::expr::{BvExpr, BvOp};
use crate::bitvec::{
    brute_force_sat, eval, free_variables, to_cnf_all, BvValue, Env, SatResult, SatStatus,
    DEFAULT_SAT_BUDGET,
};

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("assertion {index} has width {width}, expected width 1")]
    NonBooleanAssertion { index: usize, width: u32 },
    #[error("assertion references undeclared variable `{0}`")]
    UndeclaredVariable(String),
    #[error("variable `{name}` declared with width {declared} but used with width {used}")]
    DeclarationWidthMismatch {
        name: String,
        declared: u32,
        used: u32,
    },
    #[error("failed to run solver `{path}`: {source}")]
    Spawn {
        path: String,
        source: std::io::Error,
    },
    #[error("solver output not understood: {0}")]
    Protocol(String),
    #[error(transparent)]
    Bv(#[from] crate::bitvec::BvError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// A set of width-1 assertions over declared variables.
#[derive(Debug, Clone, Default)]
pub struct Query {
    variables: BTreeMap<String, u32>,
    assertions: Vec<BvExpr>,
}

impl Query {
    pub fn new() -> Query {
        Query::default()
    }

    /// Declare a variable that should appear in models even if no assertion
    /// mentions it. Variables used by assertions are declared automatically.
    pub fn declare(&mut self, name: &str, width: u32) {
        self.variables.insert(name.to_string(), width);
    }

    pub fn assert(&mut self, expr: BvExpr) -> Result<(), BackendError> {
        if expr.width() != 1 {
            return Err(BackendError::NonBooleanAssertion {
                index: self.assertions.len(),
                width: expr.width(),
            });
        }
        for (name, width) in free_variables(std::slice::from_ref(&expr)) {
            match self.variables.get(&name) {
                Some(declared) if *declared != width => {
                    return Err(BackendError::DeclarationWidthMismatch {
                        name,
                        declared: *declared,
                        used: width,
                    });
                }
                _ => {
                    self.variables.insert(name, width);
                }
            }
        }
        self.assertions.push(expr);
        Ok(())
    }

    pub fn variables(&self) -> &BTreeMap<String, u32> {
        &self.variables
    }

    pub fn assertions(&self) -> &[BvExpr] {
        &self.assertions
    }

    /// Single conjunction of all assertions (true when there are none).
    pub fn conjunction(&self) -> BvExpr {
        let mut acc = crate::ir::tt();
        for a in &self.assertions {
            acc = crate::ir::and(&acc, a);
        }
        acc
    }

    pub fn node_count(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        let mut count = 0usize;
        let mut stack: Vec<BvExpr> = self.assertions.clone();
        while let Some(e) = stack.pop() {
            if seen.insert(e.node_id()) {
                count += 1;
                stack.extend(e.operands());
            }
        }
        count
    }

    pub fn free_bits(&self) -> u64 {
        self.variables.values().map(|w| *w as u64).sum()
    }
}

fn smt_symbol(name: &str) -> String {
    let simple = !name.is_empty()
        && name
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b"~!@$%^&*_-+=<>.?/".contains(&b))
        && !name.as_bytes()[0].is_ascii_digit();
    if simple {
        name.to_string()
    } else {
        format!("|{}|", name)
    }
}

fn smt_literal(value: &BigUint, width: u32) -> String {
    if width.is_multiple_of(4) {
        let nibbles = (width / 4) as usize;
        let mut s = value.to_str_radix(16);
        while s.len() < nibbles {
            s.insert(0, '0');
        }
        format!("#x{}", s)
    } else {
        let mut s = String::with_capacity(width as usize + 2);
        s.push_str("#b");
        for i in (0..width).rev() {
            s.push(if value.bit(i as u64) { '1' } else { '0' });
        }
        s
    }
}

/// Emit a deterministic SMT-LIB v2.6 script: set-logic, sorted declarations,
/// one assert per assertion, check-sat, get-model. Shared subterms become
/// zero-argument define-funs so the output stays linear in the DAG size.
pub fn emit_smtlib(q: &Query) -> String {
    let mut out = String::new();
    out.push_str("(set-logic QF_BV)\n");
    for (name, width) in &q.variables {
        out.push_str(&format!(
            "(declare-const {} (_ BitVec {}))\n",
            smt_symbol(name),
            width
        ));
    }

    // Count references to find shared interior nodes.
    let mut refs: HashMap<u64, usize> = HashMap::new();
    let mut order: Vec<BvExpr> = Vec::new();
    {
        let mut seen = std::collections::HashSet::new();
        // Post-order so definitions precede uses.
        fn visit(
            e: &BvExpr,
            seen: &mut std::collections::HashSet<u64>,
            refs: &mut HashMap<u64, usize>,
            order: &mut Vec<BvExpr>,
        ) {
            *refs.entry(e.node_id()).or_insert(0) += 1;
            if !seen.insert(e.node_id()) {
                return;
            }
            let children = e.operands();
            if !children.is_empty() {
                for c in &children {
                    visit(c, seen, refs, order);
                }
                order.push(e.clone());
            }
        }
        for a in &q.assertions {
            visit(a, &mut seen, &mut refs, &mut order);
        }
    }
    let mut names: HashMap<u64, String> = HashMap::new();
    let mut counter = 0usize;
    for e in &order {
        if refs[&e.node_id()] > 1 {
            let name = format!("t{}", counter);
            counter += 1;
            let body = print_expr(e, &names, false);
            out.push_str(&format!(
                "(define-fun {} () (_ BitVec {}) {})\n",
                name,
                e.width(),
                body
            ));
            names.insert(e.node_id(), name);
        }
    }

    for a in &q.assertions {
        out.push_str(&format!(
            "(assert (= {} #b1))\n",
            print_expr(a, &names, true)
        ));
    }
    out.push_str("(check-sat)\n(get-model)\n");
    out
}

/// Print one node, referring to earlier define-funs for shared children.
/// `top` suppresses the name substitution for the node itself.
fn print_expr(e: &BvExpr, names: &HashMap<u64, String>, top: bool) -> String {
    if !top {
        if let Some(name) = names.get(&e.node_id()) {
            return name.clone();
        }
    }
    if let Some(v) = e.as_const() {
        return smt_literal(v, e.width());
    }
    if let Some(name) = e.as_var() {
        return smt_symbol(name);
    }
    let op = e.op().expect("operator node");
    let children = e.operands();
    let c: Vec<String> = children
        .iter()
        .map(|ch| print_expr(ch, names, false))
        .collect();
    match op {
        BvOp::Concat => format!("(concat {} {})", c[0], c[1]),
        BvOp::Extract { hi, lo } => format!("((_ extract {} {}) {})", hi, lo, c[0]),
        BvOp::ZeroExtend { extra } => format!("((_ zero_extend {}) {})", extra, c[0]),
        BvOp::SignExtend { extra } => format!("((_ sign_extend {}) {})", extra, c[0]),
        BvOp::Not => format!("(bvnot {})", c[0]),
        BvOp::And => format!("(bvand {} {})", c[0], c[1]),
        BvOp::Or => format!("(bvor {} {})", c[0], c[1]),
        BvOp::Xor => format!("(bvxor {} {})", c[0], c[1]),
        BvOp::Neg => format!("(bvneg {})", c[0]),
        BvOp::Add => format!("(bvadd {} {})", c[0], c[1]),
        BvOp::Sub => format!("(bvsub {} {})", c[0], c[1]),
        BvOp::Mul => format!("(bvmul {} {})", c[0], c[1]),
        BvOp::Udiv => format!("(bvudiv {} {})", c[0], c[1]),
        BvOp::Urem => format!("(bvurem {} {})", c[0], c[1]),
        BvOp::Shl => format!("(bvshl {} {})", c[0], c[1]),
        BvOp::Lshr => format!("(bvlshr {} {})", c[0], c[1]),
        BvOp::Ashr => format!("(bvashr {} {})", c[0], c[1]),
        BvOp::Eq => format!("(ite (= {} {}) #b1 #b0)", c[0], c[1]),
        BvOp::Ult => format!("(ite (bvult {} {}) #b1 #b0)", c[0], c[1]),
        BvOp::Ule => format!("(ite (bvule {} {}) #b1 #b0)", c[0], c[1]),
        BvOp::Slt => format!("(ite (bvslt {} {}) #b1 #b0)", c[0], c[1]),
        BvOp::Sle => format!("(ite (bvsle {} {}) #b1 #b0)", c[0], c[1]),
        BvOp::Ite => format!("(ite (= {} #b1) {} {})", c[0], c[1], c[2]),
        BvOp::RedOr => {
            let zero = smt_literal(&BigUint::from(0u8), children[0].width());
            format!("(ite (= {} {}) #b0 #b1)", c[0], zero)
        }
    }
}

/// Emit DIMACS CNF for the conjunction of all assertions, with a comment
/// block mapping input variables to CNF variable ranges (bit 0 first).
pub fn emit_dimacs(q: &Query) -> Result<String, BackendError> {
    let cnf = to_cnf_all(q.assertions())?;
    Ok(cnf.to_dimacs())
}

/// Which engine answers the query.
#[derive(Debug, Clone)]
pub enum Engine {
    /// Internal exhaustive enumeration with the given free-bit budget.
    Brute { budget: u32 },
    /// External SMT-LIB2 solver invoked as `path <script-file>`.
    ExternalSmt { path: String },
    /// External DIMACS SAT solver invoked as `path <cnf-file>`.
    ExternalSat { path: String },
}

impl Default for Engine {
    fn default() -> Self {
        Engine::Brute {
            budget: DEFAULT_SAT_BUDGET,
        }
    }
}

/// Check satisfiability of a query. External engines are spawned as child
/// processes with the problem in a temporary file and killed on timeout.
pub fn solve(q: &Query, engine: &Engine, timeout: Duration) -> Result<SatResult, BackendError> {
    match engine {
        Engine::Brute { budget } => {
            let conj = q.conjunction();
            let mut result = brute_force_sat(&conj, *budget)?;
            // Complete the model with declared-but-unconstrained variables.
            if let Some(model) = &mut result.model {
                for (name, width) in &q.variables {
                    model
                        .entry(name.clone())
                        .or_insert_with(|| BvValue::new(*width, BigUint::from(0u8)));
                }
            }
            Ok(result)
        }
        Engine::ExternalSmt { path } => {
            let script = emit_smtlib(q);
            let output = run_with_timeout(path, &script, "smt2", timeout)?;
            match output {
                None => Ok(SatResult::unknown(format!(
                    "solver `{}` timed out after {:?}",
                    path, timeout
                ))),
                Some(text) => parse_smt_output(&text, q),
            }
        }
        Engine::ExternalSat { path } => {
            let cnf = to_cnf_all(q.assertions())?;
            let text = cnf.to_dimacs();
            let output = run_with_timeout(path, &text, "cnf", timeout)?;
            match output {
                None => Ok(SatResult::unknown(format!(
                    "solver `{}` timed out after {:?}",
                    path, timeout
                ))),
                Some(text) => parse_dimacs_output(&text, &cnf.var_map, q),
            }
        }
    }
}

/// Spawn `path <file>` with the problem text written to a temp file.
/// Returns None on timeout (the child is killed).
fn run_with_timeout(
    path: &str,
    problem: &str,
    extension: &str,
    timeout: Duration,
) -> Result<Option<String>, BackendError> {
    let dir = std::env::temp_dir();
    let file = dir.join(format!(
        "fpblast-{}-{}.{}",
        std::process::id(),
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos())
            .unwrap_or(0),
        extension
    ));
    {
        let mut fh = std::fs::File::create(&file)?;
        fh.write_all(problem.as_bytes())?;
    }
    let spawn = Command::new(path)
        .arg(&file)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn();
    let mut child = match spawn {
        Ok(c) => c,
        Err(source) => {
            let _ = std::fs::remove_file(&file);
            return Err(BackendError::Spawn {
                path: path.to_string(),
                source,
            });
        }
    };
    let start = Instant::now();
    loop {
        match child.try_wait()? {
            Some(_status) => break,
            None => {
                if start.elapsed() > timeout {
                    let _ = child.kill();
                    let _ = child.wait();
                    let _ = std::fs::remove_file(&file);
                    return Ok(None);
                }
                std::thread::sleep(Duration::from_millis(2));
            }
        }
    }
    let mut text = String::new();
    if let Some(mut stdout) = child.stdout.take() {
        use std::io::Read;
        stdout.read_to_string(&mut text)?;
    }
    let _ = std::fs::remove_file(&file);
    Ok(Some(text))
}

/// Parse an SMT solver's answer: the sat/unsat/unknown verdict and, for sat,
/// the standard `(define-fun x () (_ BitVec n) #b...)` model entries.
pub fn parse_smt_output(text: &str, q: &Query) -> Result<SatResult, BackendError> {
    let mut status = None;
    for line in text.lines() {
        match line.trim() {
            "sat" => {
                status = Some(SatStatus::Sat);
                break;
            }
            "unsat" => {
                status = Some(SatStatus::Unsat);
                break;
            }
            "unknown" => {
                status = Some(SatStatus::Unknown);
                break;
            }
            _ => {}
        }
    }
    match status {
        None => Err(BackendError::Protocol(format!(
            "no sat/unsat/unknown verdict in solver output: {:?}",
            text.lines().next().unwrap_or("")
        ))),
        Some(SatStatus::Unsat) => Ok(SatResult::unsat()),
        Some(SatStatus::Unknown) => Ok(SatResult::unknown("solver reported unknown")),
        Some(SatStatus::Sat) => {
            let mut model = BTreeMap::new();
            let tokens = tokenize_sexpr(text);
            let mut i = 0;
            while i < tokens.len() {
                if tokens[i] == "define-fun" && i + 1 < tokens.len() {
                    let name = tokens[i + 1].trim_matches('|').to_string();
                    if let Some(width) = q.variables.get(&name) {
                        // Scan forward for the first literal token.
                        let mut j = i + 2;
                        let mut value = None;
                        while j < tokens.len() && tokens[j] != "define-fun" {
                            if let Some(v) = parse_bv_literal_tokens(&tokens, j) {
                                value = Some(v);
                                break;
                            }
                            j += 1;
                        }
                        if let Some(v) = value {
                            model.insert(name, BvValue::new(*width, v));
                        }
                    }
                }
                i += 1;
            }
            for (name, width) in &q.variables {
                model
                    .entry(name.clone())
                    .or_insert_with(|| BvValue::new(*width, BigUint::from(0u8)));
            }
            Ok(SatResult::sat(model))
        }
    }
}

fn tokenize_sexpr(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        match ch {
            '(' | ')' => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
                tokens.push(ch.to_string());
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }
    tokens
}

/// Recognize `#b...`, `#x...`, or `(_ bvN w)` starting at token index `at`.
fn parse_bv_literal_tokens(tokens: &[String], at: usize) -> Option<BigUint> {
    let t = &tokens[at];
    if let Some(b) = t.strip_prefix("#b") {
        return BigUint::from_str_radix(b, 2).ok();
    }
    if let Some(h) = t.strip_prefix("#x") {
        return BigUint::from_str_radix(h, 16).ok();
    }
    if t == "_" && at + 1 < tokens.len() {
        if let Some(n) = tokens[at + 1].strip_prefix("bv") {
            return BigUint::from_str_radix(n, 10).ok();
        }
    }
    None
}

/// Parse a DIMACS solver's answer (`s SATISFIABLE` + `v` lines, or a bare
/// SAT/UNSAT first line) back into variable values via the literal map.
pub fn parse_dimacs_output(
    text: &str,
    var_map: &BTreeMap<String, (u32, u32)>,
    q: &Query,
) -> Result<SatResult, BackendError> {
    let mut status = None;
    let mut true_lits: std::collections::HashSet<i64> = std::collections::HashSet::new();
    for line in text.lines() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("s ") {
            status = match rest.trim() {
                "SATISFIABLE" => Some(SatStatus::Sat),
                "UNSATISFIABLE" => Some(SatStatus::Unsat),
                _ => Some(SatStatus::Unknown),
            };
        } else if line == "SAT" || line == "SATISFIABLE" {
            status = Some(SatStatus::Sat);
        } else if line == "UNSAT" || line == "UNSATISFIABLE" {
            status = Some(SatStatus::Unsat);
        } else if let Some(rest) = line.strip_prefix("v ") {
            for tok in rest.split_whitespace() {
                if let Ok(lit) = tok.parse::<i64>() {
                    if lit > 0 {
                        true_lits.insert(lit);
                    }
                }
            }
        } else if status == Some(SatStatus::Sat) && !line.is_empty() {
            // Bare model line after a SAT verdict (minisat-style output).
            for tok in line.split_whitespace() {
                if let Ok(lit) = tok.parse::<i64>() {
                    if lit > 0 {
                        true_lits.insert(lit);
                    }
                }
            }
        }
    }
    match status {
        None => Err(BackendError::Protocol(
            "no DIMACS verdict in solver output".to_string(),
        )),
        Some(SatStatus::Unknown) => Ok(SatResult::unknown("solver reported unknown")),
        Some(SatStatus::Unsat) => Ok(SatResult::unsat()),
        Some(SatStatus::Sat) => {
            let mut model = BTreeMap::new();
            for (name, (first, width)) in var_map {
                let mut value = BigUint::from(0u8);
                for b in 0..*width {
                    if true_lits.contains(&((first + b) as i64)) {
                        value |= BigUint::from(1u8) << b;
                    }
                }
                model.insert(name.clone(), BvValue::new(*width, value));
            }
            for (name, width) in &q.variables {
                model
                    .entry(name.clone())
                    .or_insert_with(|| BvValue::new(*width, BigUint::from(0u8)));
            }
            Ok(SatResult::sat(model))
        }
    }
}

/// Evaluate every assertion under a model; true when all hold.
pub fn model_satisfies(q: &Query, model: &BTreeMap<String, BvValue>) -> Result<bool, BackendError> {
    let env: Env = model.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
    for a in &q.assertions {
        let v = eval(a, &env)?;
        if v.value != BigUint::from(1u8) {
            return Ok(false);
        }
    }
    Ok(true)
}
