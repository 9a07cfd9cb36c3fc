//! Scenario configuration: a single JSON document, read field by field so
//! that every problem is reported with its path.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use serde_json::{Map, Value};

use hybrid_koopman::classical_koopman::DerivativeScheme;
use hybrid_koopman::expr::{self, Func};
use hybrid_koopman::hybrid_algebra::LiftKind;
use hybrid_koopman::phase_space::{Boundary, HamiltonianPreset};

/// Invariant suites a run can enforce.
pub const CHECKS: [&str; 5] = ["trace", "positivity", "entropy", "hermiticity", "back_reaction"];

pub const DEFAULT_N_SAMPLES: usize = 11;

/// Row-major `d×d` matrix of `[re, im]` pairs.
pub type MatrixSpec = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfigErrors(pub Vec<FieldError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, e) in self.0.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

impl ConfigErrors {
    pub fn single(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self(vec![FieldError { path: path.into(), message: message.into() }])
    }

    pub fn paths(&self) -> Vec<&str> {
        self.0.iter().map(|e| e.path.as_str()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    pub n_q: usize,
    pub n_p: usize,
    pub q_range: [f64; 2],
    pub p_range: [f64; 2],
    pub boundary: String,
    pub scheme: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplingSpec {
    pub classical: String,
    pub quantum: MatrixSpec,
    pub strength: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HamiltonianSpec {
    /// Preset name or expression.
    pub classical: String,
    pub quantum: MatrixSpec,
    pub coupling: Vec<CouplingSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialStateSpec {
    /// `ρ(ξ) ∝ F(ξ)·ρ_Q`.
    Product { classical: String, quantum: MatrixSpec },
    /// `ρ(ξ)` given entrywise by `[re, im]` expression pairs, normalized afterwards.
    Custom { blocks: Vec<Vec<[String; 2]>> },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimeSpec {
    pub t_end: f64,
    pub n_samples: usize,
}

impl TimeSpec {
    pub fn times(&self) -> Vec<f64> {
        let n = self.n_samples - 1;
        (0..=n).map(|k| if k == n { self.t_end } else { self.t_end * k as f64 / n as f64 }).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TermSpec {
    pub classical: String,
    pub quantum: MatrixSpec,
    pub coefficient: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObservableSpec {
    pub name: String,
    pub terms: Vec<TermSpec>,
}

/// A validated scenario with every default filled in.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub grid: GridSpec,
    pub quantum_dim: usize,
    pub params: BTreeMap<String, f64>,
    pub hamiltonian: HamiltonianSpec,
    pub initial_state: InitialStateSpec,
    pub lift: String,
    pub time: TimeSpec,
    pub observables: Vec<ObservableSpec>,
    pub checks: Vec<String>,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigErrors> {
        let v: Value = serde_json::from_str(text)
            .map_err(|e| ConfigErrors::single("", format!("invalid JSON at line {}, column {}: {e}", e.line(), e.column())))?;
        Self::from_value(&v)
    }

    pub fn from_value(v: &Value) -> Result<Self, ConfigErrors> {
        let mut r = Reader::default();
        let cfg = r.scenario(v);
        match cfg {
            Some(c) if r.errors.is_empty() => Ok(c),
            _ => Err(ConfigErrors(r.errors)),
        }
    }

    pub fn lift_kind(&self) -> LiftKind {
        LiftKind::from_name(&self.lift).expect("validated")
    }

    pub fn scheme(&self) -> DerivativeScheme {
        DerivativeScheme::from_name(&self.grid.scheme).expect("validated")
    }

    pub fn boundary(&self) -> Boundary {
        Boundary::from_name(&self.grid.boundary).expect("validated")
    }

    pub fn preset(&self) -> Option<HamiltonianPreset> {
        HamiltonianPreset::from_name(self.hamiltonian.classical.trim()).ok()
    }

    /// Expression text with parameters substituted.
    pub fn expression(&self, src: &str) -> String {
        substitute(src, &self.params)
    }

    pub fn enabled(&self, check: &str) -> bool {
        self.checks.iter().any(|c| c == check)
    }

    /// Replaces the enabled suites: `all`, `none` or a comma-separated list.
    pub fn override_checks(&mut self, spec: &str) -> Result<(), ConfigErrors> {
        let items: Vec<Value> = spec.split(',').map(|s| Value::String(s.trim().to_string())).collect();
        let mut r = Reader::default();
        let checks = r.checks(Some(&Value::Array(items)), "--checks");
        if !r.errors.is_empty() {
            return Err(ConfigErrors(r.errors));
        }
        self.checks = checks;
        Ok(())
    }
}

/// Replaces whole identifiers that name parameters by their parenthesized value.
pub fn substitute(src: &str, params: &BTreeMap<String, f64>) -> String {
    let chars: Vec<char> = src.chars().collect();
    let mut out = String::with_capacity(src.len());
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            out.extend(&chars[start..i]);
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let ident: String = chars[start..i].iter().collect();
            match params.get(&ident) {
                Some(v) => out.push_str(&format!("({v:?})")),
                None => out.push_str(&ident),
            }
        } else {
            out.push(c);
            i += 1;
        }
    }
    out
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

#[derive(Default)]
struct Reader {
    errors: Vec<FieldError>,
    params: BTreeMap<String, f64>,
}

type Obj = Map<String, Value>;

impl Reader {
    fn err(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.errors.push(FieldError { path: path.into(), message: message.into() });
    }

    /// A missing object is read as empty so its required members are reported.
    fn object<'v>(&mut self, v: Option<&'v Value>, path: &str, allowed: &[&str]) -> Option<&'v Obj> {
        static EMPTY: std::sync::OnceLock<Obj> = std::sync::OnceLock::new();
        match v {
            None | Some(Value::Null) => Some(EMPTY.get_or_init(Obj::new)),
            Some(Value::Object(m)) => {
                for key in m.keys() {
                    if !allowed.contains(&key.as_str()) {
                        self.err(join(path, key), format!("unknown field (expected one of: {})", allowed.join(", ")));
                    }
                }
                Some(m)
            }
            Some(other) => {
                self.err(path, format!("expected an object, found {}", kind(other)));
                None
            }
        }
    }

    fn get<'v>(m: Option<&'v Obj>, key: &str) -> Option<&'v Value> {
        m.and_then(|m| m.get(key)).filter(|v| !v.is_null())
    }

    fn required<'v>(&mut self, m: Option<&'v Obj>, key: &str, path: &str) -> Option<&'v Value> {
        let v = Self::get(m, key);
        if v.is_none() && m.is_some() {
            self.err(join(path, key), "required field is missing");
        }
        v
    }

    fn number(&mut self, v: &Value, path: &str) -> Option<f64> {
        match v.as_f64() {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                self.err(path, format!("expected a finite number, found {}", kind(v)));
                None
            }
        }
    }

    fn integer(&mut self, v: &Value, path: &str, min: u64) -> Option<u64> {
        match v.as_u64() {
            Some(x) if x >= min => Some(x),
            Some(x) => {
                self.err(path, format!("must be at least {min}, found {x}"));
                None
            }
            None => {
                self.err(path, format!("expected a non-negative integer, found {v}"));
                None
            }
        }
    }

    fn string(&mut self, v: &Value, path: &str) -> Option<String> {
        match v.as_str() {
            Some(s) => Some(s.to_string()),
            None => {
                self.err(path, format!("expected a string, found {}", kind(v)));
                None
            }
        }
    }

    fn choice(&mut self, v: Option<&Value>, path: &str, options: &[&str], default: &str) -> Option<String> {
        let s = match v {
            None => return Some(default.to_string()),
            Some(v) => self.string(v, path)?,
        };
        if options.contains(&s.as_str()) {
            Some(s)
        } else {
            self.err(path, format!("unknown value {s:?} (expected one of: {})", options.join(", ")));
            None
        }
    }

    fn range(&mut self, v: Option<&Value>, path: &str) -> Option<[f64; 2]> {
        let v = v?;
        match v.as_array().map(|a| a.as_slice()) {
            Some([a, b]) => {
                let (a, b) = (self.number(a, &format!("{path}[0]"))?, self.number(b, &format!("{path}[1]"))?);
                if a < b {
                    Some([a, b])
                } else {
                    self.err(path, format!("lower bound {a} must be below upper bound {b}"));
                    None
                }
            }
            _ => {
                self.err(path, "expected [min, max]");
                None
            }
        }
    }

    fn complex(&mut self, v: &Value, path: &str) -> Option<[f64; 2]> {
        match v {
            Value::Number(_) => Some([self.number(v, path)?, 0.0]),
            Value::Array(a) if a.len() == 2 => {
                Some([self.number(&a[0], &format!("{path}[0]"))?, self.number(&a[1], &format!("{path}[1]"))?])
            }
            _ => {
                self.err(path, format!("expected [re, im] or a real number, found {}", kind(v)));
                None
            }
        }
    }

    fn rows<'v>(&mut self, v: &'v Value, path: &str, d: usize) -> Option<Vec<&'v [Value]>> {
        let rows = match v.as_array() {
            Some(r) if r.len() == d => r,
            _ => {
                self.err(path, format!("expected {d} rows of {d} entries"));
                return None;
            }
        };
        let mut out = Vec::with_capacity(d);
        let mut ok = true;
        for (i, row) in rows.iter().enumerate() {
            match row.as_array() {
                Some(r) if r.len() == d => out.push(r.as_slice()),
                _ => {
                    self.err(format!("{path}[{i}]"), format!("expected a row of {d} entries"));
                    ok = false;
                }
            }
        }
        ok.then_some(out)
    }

    fn matrix(&mut self, v: &Value, path: &str, d: usize, hermitian: bool) -> Option<MatrixSpec> {
        let rows = self.rows(v, path, d)?;
        let mut m = Vec::with_capacity(d);
        let mut ok = true;
        for (i, row) in rows.iter().enumerate() {
            let mut r = Vec::with_capacity(d);
            for (j, e) in row.iter().enumerate() {
                match self.complex(e, &format!("{path}[{i}][{j}]")) {
                    Some(z) => r.push(z),
                    None => ok = false,
                }
            }
            m.push(r);
        }
        if !ok {
            return None;
        }
        if hermitian {
            let mut defect: f64 = 0.0;
            for i in 0..d {
                for j in 0..d {
                    defect = defect.max((m[i][j][0] - m[j][i][0]).abs()).max((m[i][j][1] + m[j][i][1]).abs());
                }
            }
            if defect > 1e-12 {
                self.err(path, format!("matrix is not Hermitian (max |A - A^dagger| = {defect:e})"));
                return None;
            }
        }
        Some(m)
    }

    fn expression(&mut self, v: &Value, path: &str, allow_preset: bool) -> Option<String> {
        let s = self.string(v, path)?;
        if allow_preset && HamiltonianPreset::from_name(s.trim()).is_ok() {
            return Some(s);
        }
        match expr::parse(&substitute(&s, &self.params)) {
            Ok(_) => Some(s),
            Err(e) => {
                self.err(path, e.to_string());
                None
            }
        }
    }

    fn params(&mut self, v: Option<&Value>) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        let Some(v) = v else { return out };
        let Some(m) = v.as_object() else {
            self.err("params", format!("expected an object of numbers, found {}", kind(v)));
            return out;
        };
        for (k, val) in m {
            let path = format!("params.{k}");
            let valid_ident = k.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !valid_ident {
                self.err(&path, "parameter names must be identifiers");
            } else if k == "q" || k == "p" || Func::ALL.iter().any(|f| f.name() == k) {
                self.err(&path, format!("{k:?} is reserved by the expression language"));
            } else if let Some(x) = self.number(val, &path) {
                out.insert(k.clone(), x);
            }
        }
        out
    }

    fn checks(&mut self, v: Option<&Value>, path: &str) -> Vec<String> {
        let all = || CHECKS.iter().map(|s| s.to_string()).collect();
        let Some(v) = v else { return all() };
        let Some(items) = v.as_array() else {
            self.err(path, format!("expected an array of suite names, found {}", kind(v)));
            return Vec::new();
        };
        let mut out: Vec<String> = Vec::new();
        for (i, item) in items.iter().enumerate() {
            let p = format!("{path}[{i}]");
            let Some(s) = self.string(item, &p) else { continue };
            match s.as_str() {
                "all" => return all(),
                "none" => {}
                name if CHECKS.contains(&name) => {
                    if !out.iter().any(|c| c == name) {
                        out.push(name.to_string());
                    }
                }
                other => self.err(p, format!("unknown check {other:?} (expected all, none or one of: {})", CHECKS.join(", "))),
            }
        }
        // report in canonical order so resolved configs are stable
        CHECKS.iter().filter(|c| out.iter().any(|o| o == *c)).map(|c| c.to_string()).collect()
    }

    fn grid(&mut self, v: Option<&Value>) -> Option<GridSpec> {
        let m = self.object(v, "grid", &["n_q", "n_p", "q_range", "p_range", "boundary", "scheme"]);
        let n_q = self.required(m, "n_q", "grid").and_then(|v| self.integer(v, "grid.n_q", 4));
        let n_p = self.required(m, "n_p", "grid").and_then(|v| self.integer(v, "grid.n_p", 4));
        let q = self.required(m, "q_range", "grid");
        let q_range = self.range(q, "grid.q_range");
        let p = self.required(m, "p_range", "grid");
        let p_range = self.range(p, "grid.p_range");
        let boundary = self.choice(Self::get(m, "boundary"), "grid.boundary", &["periodic", "zero"], "periodic");
        let scheme =
            self.choice(Self::get(m, "scheme"), "grid.scheme", &["central2", "central4", "fourier"], "central2");
        if boundary.as_deref() == Some("zero") && scheme.as_deref().is_some_and(|s| s != "central2") {
            self.err("grid.scheme", "only central2 is available with a zero boundary");
        }
        Some(GridSpec {
            n_q: n_q? as usize,
            n_p: n_p? as usize,
            q_range: q_range?,
            p_range: p_range?,
            boundary: boundary?,
            scheme: scheme?,
        })
    }

    fn hamiltonian(&mut self, v: Option<&Value>, d: Option<usize>) -> Option<HamiltonianSpec> {
        let m = self.object(v, "hamiltonian", &["classical", "quantum", "coupling"]);
        let classical = self.required(m, "classical", "hamiltonian").and_then(|v| self.expression(v, "hamiltonian.classical", true));
        let d = d?;
        let quantum = match Self::get(m, "quantum") {
            Some(v) => self.matrix(v, "hamiltonian.quantum", d, true),
            None => Some(vec![vec![[0.0, 0.0]; d]; d]),
        };
        let mut coupling = Some(Vec::new());
        if let Some(v) = Self::get(m, "coupling") {
            match v.as_array() {
                Some(items) => {
                    for (i, item) in items.iter().enumerate() {
                        let path = format!("hamiltonian.coupling[{i}]");
                        let c = self.object(Some(item), &path, &["classical", "quantum", "strength"]);
                        let cl = self.required(c, "classical", &path).and_then(|v| self.expression(v, &join(&path, "classical"), false));
                        let qm = self.required(c, "quantum", &path).and_then(|v| self.matrix(v, &join(&path, "quantum"), d, true));
                        let st = match Self::get(c, "strength") {
                            Some(v) => self.number(v, &join(&path, "strength")),
                            None => Some(1.0),
                        };
                        match (cl, qm, st, coupling.as_mut()) {
                            (Some(classical), Some(quantum), Some(strength), Some(list)) => {
                                list.push(CouplingSpec { classical, quantum, strength })
                            }
                            _ => coupling = None,
                        }
                    }
                }
                None => {
                    self.err("hamiltonian.coupling", format!("expected an array, found {}", kind(v)));
                    coupling = None;
                }
            }
        }
        Some(HamiltonianSpec { classical: classical?, quantum: quantum?, coupling: coupling? })
    }

    fn initial_state(&mut self, v: Option<&Value>, d: Option<usize>) -> Option<InitialStateSpec> {
        let path = "initial_state";
        let m = self.object(v, path, &["kind", "classical", "quantum", "blocks"]);
        let kind = self.choice(Self::get(m, "kind"), "initial_state.kind", &["product", "custom"], "product")?;
        let d = d?;
        if kind == "product" {
            if Self::get(m, "blocks").is_some() {
                self.err("initial_state.blocks", "only allowed with kind \"custom\"");
            }
            let classical = self.required(m, "classical", path).and_then(|v| self.expression(v, "initial_state.classical", false));
            let quantum = match Self::get(m, "quantum") {
                Some(v) => self.matrix(v, "initial_state.quantum", d, true),
                None => Some((0..d).map(|i| (0..d).map(|j| [if i == j { 1.0 / d as f64 } else { 0.0 }, 0.0]).collect()).collect()),
            };
            Some(InitialStateSpec::Product { classical: classical?, quantum: quantum? })
        } else {
            for key in ["classical", "quantum"] {
                if Self::get(m, key).is_some() {
                    self.err(join(path, key), "only allowed with kind \"product\"");
                }
            }
            let v = self.required(m, "blocks", path)?;
            let rows = self.rows(v, "initial_state.blocks", d)?;
            let mut blocks = Vec::with_capacity(d);
            let mut ok = true;
            for (i, row) in rows.iter().enumerate() {
                let mut r = Vec::with_capacity(d);
                for (j, e) in row.iter().enumerate() {
                    let p = format!("initial_state.blocks[{i}][{j}]");
                    let pair = match e {
                        Value::String(_) => self.expression(e, &p, false).map(|re| [re, "0".to_string()]),
                        Value::Array(a) if a.len() == 2 => {
                            let re = self.expression(&a[0], &format!("{p}[0]"), false);
                            let im = self.expression(&a[1], &format!("{p}[1]"), false);
                            re.zip(im).map(|(re, im)| [re, im])
                        }
                        _ => {
                            self.err(&p, "expected an expression or a [re, im] pair of expressions");
                            None
                        }
                    };
                    match pair {
                        Some(pair) => r.push(pair),
                        None => ok = false,
                    }
                }
                blocks.push(r);
            }
            ok.then_some(InitialStateSpec::Custom { blocks })
        }
    }

    fn time(&mut self, v: Option<&Value>) -> Option<TimeSpec> {
        let m = self.object(v, "time", &["t_end", "n_samples"]);
        let t_end = self.required(m, "t_end", "time").and_then(|v| self.number(v, "time.t_end"));
        if let Some(t) = t_end {
            if t < 0.0 {
                self.err("time.t_end", format!("must be non-negative, found {t}"));
                return None;
            }
        }
        let n_samples = match Self::get(m, "n_samples") {
            Some(v) => self.integer(v, "time.n_samples", 2).map(|n| n as usize),
            None => Some(DEFAULT_N_SAMPLES),
        };
        Some(TimeSpec { t_end: t_end?, n_samples: n_samples? })
    }

    fn observables(&mut self, v: Option<&Value>, d: Option<usize>) -> Option<Vec<ObservableSpec>> {
        let Some(v) = v else { return Some(Vec::new()) };
        let Some(items) = v.as_array() else {
            self.err("observables", format!("expected an array, found {}", kind(v)));
            return None;
        };
        let d = d?;
        let mut out = Vec::new();
        let mut ok = true;
        for (i, item) in items.iter().enumerate() {
            let path = format!("observables[{i}]");
            let m = self.object(Some(item), &path, &["name", "terms"]);
            let name = self.required(m, "name", &path).and_then(|v| self.string(v, &join(&path, "name")));
            if let Some(n) = &name {
                let reserved = ["time", "s_vn", "s_h", "purity_q", "trace_residual", "min_eigenvalue", "marginal_deviation"];
                if n.is_empty() || reserved.contains(&n.as_str()) || out.iter().any(|o: &ObservableSpec| &o.name == n) {
                    self.err(join(&path, "name"), format!("name {n:?} is empty, reserved or already used"));
                    ok = false;
                }
            }
            let mut terms = Vec::new();
            match self.required(m, "terms", &path) {
                Some(Value::Array(ts)) if !ts.is_empty() => {
                    for (j, t) in ts.iter().enumerate() {
                        let tp = format!("{path}.terms[{j}]");
                        let tm = self.object(Some(t), &tp, &["classical", "quantum", "coefficient"]);
                        let cl = match Self::get(tm, "classical") {
                            Some(v) => self.expression(v, &join(&tp, "classical"), false),
                            None => Some("1".to_string()),
                        };
                        let qm = match Self::get(tm, "quantum") {
                            Some(v) => self.matrix(v, &join(&tp, "quantum"), d, false),
                            None => Some((0..d).map(|a| (0..d).map(|b| [(a == b) as u8 as f64, 0.0]).collect()).collect()),
                        };
                        let co = match Self::get(tm, "coefficient") {
                            Some(v) => self.complex(v, &join(&tp, "coefficient")),
                            None => Some([1.0, 0.0]),
                        };
                        match (cl, qm, co) {
                            (Some(classical), Some(quantum), Some(coefficient)) => {
                                terms.push(TermSpec { classical, quantum, coefficient })
                            }
                            _ => ok = false,
                        }
                    }
                }
                Some(_) => {
                    self.err(join(&path, "terms"), "expected a non-empty array of terms");
                    ok = false;
                }
                None => ok = false,
            }
            match name {
                Some(name) => out.push(ObservableSpec { name, terms }),
                None => ok = false,
            }
        }
        ok.then_some(out)
    }

    fn scenario(&mut self, v: &Value) -> Option<ScenarioConfig> {
        let top = [
            "grid",
            "quantum_dim",
            "params",
            "hamiltonian",
            "initial_state",
            "lift",
            "time",
            "observables",
            "checks",
            "seed",
        ];
        let Value::Object(_) = v else {
            self.err("", format!("expected a JSON object, found {}", kind(v)));
            return None;
        };
        let root = self.object(Some(v), "", &top);
        self.params = self.params(Self::get(root, "params"));
        let grid = self.grid(Self::get(root, "grid"));
        let d = self.required(root, "quantum_dim", "").and_then(|v| self.integer(v, "quantum_dim", 1)).map(|d| d as usize);
        let hamiltonian = self.hamiltonian(Self::get(root, "hamiltonian"), d);
        let initial_state = self.initial_state(Self::get(root, "initial_state"), d);
        let lift = self.choice(Self::get(root, "lift"), "lift", &["block_diagonal", "coherent"], "block_diagonal");
        let time = self.time(Self::get(root, "time"));
        let observables = self.observables(Self::get(root, "observables"), d);
        let checks = self.checks(Self::get(root, "checks"), "checks");
        let seed = match Self::get(root, "seed") {
            Some(v) => self.integer(v, "seed", 0),
            None => Some(0),
        };
        Some(ScenarioConfig {
            grid: grid?,
            quantum_dim: d?,
            params: self.params.clone(),
            hamiltonian: hamiltonian?,
            initial_state: initial_state?,
            lift: lift?,
            time: time?,
            observables: observables?,
            checks,
            seed: seed?,
        })
    }
}
