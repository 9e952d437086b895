use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Value};

use super::{Command, Presentation, Scenario, Task, MAX_DEGREE};
use crate::basic::{basic_cohomology, invariant_forms};
use crate::cech::{betti, duality_check, CoefficientSystem};
use crate::chernweil::{
    calibrate_sign, closed_formula_cocycle, connection_homotopy, cw_cocycle, gv, residual_sweep, stokes_check, u1,
    ArrowModel, CdrCochain, ChainString, ChernWeilError, CocycleDescriptor, ConnectionAssignment, InvariantPolynomial,
    Link, SIGN_FLAG,
};
use crate::collapse::{cech_cocycle_check, collapse_cocycle, thurston_gv, OneObjectModel};
use crate::symexpr::{BoxBounds, Expr};

/// Command-line values that replace task parameters.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub max_degree: Option<usize>,
    pub max_k: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TaskReport {
    pub command: String,
    /// Effective parameters after defaults and overrides.
    pub parameters: BTreeMap<String, String>,
    /// Quadrature tolerance, for numeric tasks.
    pub tolerance: Option<f64>,
    /// Pass threshold, for numeric tasks.
    pub threshold: Option<f64>,
    pub status: Status,
    pub result: Value,
    pub message: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub scenario: String,
    pub engine_version: String,
    pub seed: u64,
    pub sign_flag: i8,
    pub status: Status,
    pub tasks: Vec<TaskReport>,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Error => 2,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Plain-text rendering of [`Self::to_json`].
    pub fn to_table(&self) -> String {
        let v = serde_json::to_value(self).expect("report serializes");
        let mut out = format!(
            "scenario {}  status {}  seed {}  sign_flag {}  engine {}\n",
            v["scenario"].as_str().unwrap_or(""),
            v["status"].as_str().unwrap_or(""),
            v["seed"],
            v["sign_flag"],
            v["engine_version"].as_str().unwrap_or("")
        );
        for t in v["tasks"].as_array().into_iter().flatten() {
            out.push_str(&format!(
                "\n[{}] {}\n",
                t["status"].as_str().unwrap_or(""),
                t["command"].as_str().unwrap_or("")
            ));
            let mut rows = Vec::new();
            flatten("parameters", &t["parameters"], &mut rows);
            for key in ["tolerance", "threshold", "message"] {
                if !t[key].is_null() {
                    flatten(key, &t[key], &mut rows);
                }
            }
            flatten("result", &t["result"], &mut rows);
            let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            for (k, val) in rows {
                out.push_str(&format!("  {k:<width$}  {val}\n"));
            }
        }
        out
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(&format!("{prefix}.{k}"), x, out);
            }
        }
        Value::Array(a) if a.iter().any(|x| x.is_object()) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), x, out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

/// Delegates to a model with another sampling seed.
struct Seeded<'a> {
    inner: &'a dyn ArrowModel,
    seed: u64,
}

impl ArrowModel for Seeded<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn chart_count(&self) -> usize {
        self.inner.chart_count()
    }
    fn chart_bounds(&self, chart: usize) -> &BoxBounds {
        self.inner.chart_bounds(chart)
    }
    fn compose(&self, g: &Link, f: &Link) -> Result<Option<Link>, ChernWeilError> {
        self.inner.compose(g, f)
    }
    fn strings(&self, k: usize) -> Vec<ChainString> {
        self.inner.strings(k)
    }
    fn seed(&self) -> u64 {
        self.seed
    }
}

struct Ctx<'a> {
    scenario: &'a Scenario,
    model: Seeded<'a>,
    overrides: &'a Overrides,
}

struct Outcome {
    status: Status,
    result: Value,
    tolerance: Option<f64>,
    threshold: Option<f64>,
}

type TaskResult = Result<Outcome, String>;

struct Params<'a> {
    given: &'a BTreeMap<String, String>,
    used: BTreeMap<String, String>,
}

impl Params<'_> {
    fn str(&mut self, key: &str, default: &str) -> String {
        let v = self.given.get(key).cloned().unwrap_or_else(|| default.to_string());
        self.used.insert(key.into(), v.clone());
        v
    }

    fn opt(&mut self, key: &str) -> Option<String> {
        let v = self.given.get(key).cloned();
        if let Some(v) = &v {
            self.used.insert(key.into(), v.clone());
        }
        v
    }

    fn num<T: std::str::FromStr + ToString>(&mut self, key: &str, default: T, over: Option<T>) -> Result<T, String> {
        let v = match (over, self.given.get(key)) {
            (Some(o), _) => o,
            (None, Some(s)) => s.parse().map_err(|_| format!("{key}: cannot parse '{s}'"))?,
            (None, None) => default,
        };
        self.used.insert(key.into(), v.to_string());
        Ok(v)
    }

    fn flag(&mut self, key: &str) -> Result<bool, String> {
        match self.given.get(key).map(String::as_str) {
            None => Ok(false),
            Some(v @ ("true" | "false")) => {
                self.used.insert(key.into(), v.into());
                Ok(v == "true")
            }
            Some(v) => Err(format!("{key}: expected true or false, got '{v}'")),
        }
    }
}

fn pass_if(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

fn parse_list(s: &str) -> Result<Vec<usize>, String> {
    s.split(',')
        .map(|x| x.trim().parse().map_err(|_| format!("bad list entry '{x}'")))
        .collect()
}

impl Ctx<'_> {
    fn q(&self) -> usize {
        self.scenario.presentation.dim()
    }

    fn category(&self, what: &str) -> Result<&crate::category::CategoryPresentation, String> {
        self.scenario
            .presentation
            .category()
            .ok_or_else(|| format!("{what} needs a category scenario"))
    }

    fn one_object(&self, what: &str) -> Result<&OneObjectModel, String> {
        self.scenario
            .presentation
            .one_object()
            .ok_or_else(|| format!("{what} needs a one-object scenario"))
    }

    fn max_degree(&self, p: &mut Params, default: usize) -> Result<usize, String> {
        let n = p.num("max-degree", default, self.overrides.max_degree)?;
        if n > MAX_DEGREE {
            return Err(format!("max-degree {n} exceeds {MAX_DEGREE}"));
        }
        Ok(n)
    }

    fn max_k(&self, p: &mut Params) -> Result<usize, String> {
        let q = self.q();
        let k = p.num("max-k", q + 2, self.overrides.max_k)?;
        if k > q + 2 {
            return Err(format!("max-k {k} exceeds q+2 = {}", q + 2));
        }
        Ok(k)
    }

    fn tol(&self, p: &mut Params, default: f64) -> Result<f64, String> {
        p.num("tol", default, self.overrides.tol)
    }

    fn connection(&self, p: &mut Params) -> Result<ConnectionAssignment, String> {
        let q = self.q();
        let charts = self.model.chart_count();
        match p.str("connection", "trivial").as_str() {
            "trivial" => Ok(ConnectionAssignment::trivial(charts, q)),
            "scenario" => self.scenario_connection(),
            other => Err(format!("connection must be trivial or scenario, not '{other}'")),
        }
    }

    fn scenario_connection(&self) -> Result<ConnectionAssignment, String> {
        self.scenario
            .connection
            .clone()
            .ok_or_else(|| "the scenario has no [connection] section".to_string())
    }

    fn validate(&self, _p: &mut Params) -> TaskResult {
        let (charts, morphisms) = self.scenario.presentation.counts();
        let (ok, report) = match &self.scenario.presentation {
            Presentation::Category(c) => {
                let r = c.validate_with_seed(self.model.seed);
                (r.is_valid(), to_value(&r))
            }
            Presentation::OneObject(_) => (true, Value::Null),
        };
        Ok(Outcome {
            status: pass_if(ok),
            result: json!({ "charts": charts, "morphisms": morphisms, "report": report }),
            tolerance: None,
            threshold: None,
        })
    }

    fn betti(&self, p: &mut Params) -> TaskResult {
        let cat = self.category("betti")?;
        let c = match p.str("coefficient", "trivial").as_str() {
            "trivial" => CoefficientSystem::Trivial,
            "orientation" => CoefficientSystem::Orientation,
            other => return Err(format!("unknown coefficient system '{other}'")),
        };
        let n = self.max_degree(p, 4)?;
        let table = betti(cat, c, n).map_err(|e| e.to_string())?;
        let ok = match p.opt("expect") {
            Some(e) => {
                // degrees beyond max-degree are not checked
                parse_list(&e)?.iter().zip(&table.betti).all(|(a, b)| a == b)
            }
            None => true,
        };
        Ok(Outcome {
            status: pass_if(ok),
            result: json!({ "degrees": (0..=n).collect::<Vec<_>>(), "betti": table.betti, "coefficient": c, "cochain_dims": table.cochain_dims, "ranks": table.ranks }),
            tolerance: None,
            threshold: None,
        })
    }

    fn duality(&self, p: &mut Params) -> TaskResult {
        let cat = self.category("duality")?;
        let n = self.max_degree(p, 6)?;
        let r = duality_check(cat, n).map_err(|e| e.to_string())?;
        let trivial = betti(cat, CoefficientSystem::Trivial, n).map_err(|e| e.to_string())?;
        let pairs: Vec<(usize, usize)> = r.pairs.iter().map(|x| (x.cohomology, x.compact)).collect();
        Ok(Outcome {
            status: pass_if(r.pass),
            result: json!({
                "degrees": (0..=n).collect::<Vec<_>>(),
                "betti": trivial.betti,
                "coefficient": CoefficientSystem::Orientation,
                "duality_pairs": pairs,
                "pass": r.pass,
            }),
            tolerance: None,
            threshold: None,
        })
    }

    fn basic(&self, p: &mut Params) -> TaskResult {
        let cat = self.category("basic")?;
        let ell = p.num("form-degree", 0usize, None)?;
        let d = p.num("poly-degree", 2u32, None)?;
        let basis = invariant_forms(cat, ell, d).map_err(|e| e.to_string())?;
        let coh = basic_cohomology(cat, d, self.q()).map_err(|e| e.to_string())?;
        let dim = basis.dimension();
        let ok = match p.opt("expect") {
            Some(e) => e.trim().parse::<usize>().map_err(|_| format!("expect: bad value '{e}'"))? == dim,
            None => true,
        };
        Ok(Outcome {
            status: pass_if(ok),
            result: json!({ "form_degree": ell, "poly_degree": d, "dimension": dim, "ansatz_dimension": basis.ansatz.basis.len(), "cohomology": coh }),
            tolerance: None,
            threshold: None,
        })
    }

    fn cochain(&self, class: &str, conn: &ConnectionAssignment, max_k: usize, tol: f64) -> Result<CdrCochain, String> {
        let d = CocycleDescriptor::parse(class).map_err(|e| e.to_string())?;
        match (&d, conn.is_trivial()) {
            (CocycleDescriptor::Invariant(poly), false) => Ok(cw_cocycle(&d.name(), poly, conn, max_k, tol)),
            (CocycleDescriptor::Invariant(_) | CocycleDescriptor::ChernCharacter(_), _) | (_, true) => {
                closed_formula_cocycle(&d, self.q(), self.model.chart_count(), max_k, tol).map_err(|e| e.to_string())
            }
            _ => Err(format!("class {class} is only defined for the trivial connection")),
        }
    }

    fn cocycle(&self, p: &mut Params) -> TaskResult {
        let class = p.str("class", "c1");
        let check = p.flag("check-closed")?;
        let zero = p.flag("expect-zero")?;
        let max_k = self.max_k(p)?;
        let points = p.num("points", 10usize, None)?;
        let tol = self.tol(p, 1e-8)?;
        let threshold = p.num("threshold", if check { 1e-6 } else { 1e-10 }, None)?;
        let conn = self.connection(p)?;
        let c = self.cochain(&class, &conn, max_k, tol)?;
        let target = if check { c.total_coboundary() } else { c };
        let r = residual_sweep(&self.model, &target, max_k, points).map_err(|e| e.to_string())?;
        let judged = check || zero;
        Ok(Outcome {
            status: pass_if(!judged || r.max_residual < threshold),
            result: json!({
                "class": class,
                "components_sampled": r.components_sampled,
                "max_residual": r.max_residual,
                "worst": r.worst,
                "strings": r.strings,
                "sign_flag": SIGN_FLAG,
            }),
            tolerance: Some(tol),
            threshold: judged.then_some(threshold),
        })
    }

    fn invariant(&self, p: &mut Params) -> Result<InvariantPolynomial, String> {
        let class = p.str("class", "c1");
        match CocycleDescriptor::parse(&class).map_err(|e| e.to_string())? {
            CocycleDescriptor::Invariant(poly) => Ok(poly),
            CocycleDescriptor::ChernCharacter(n) => Ok(InvariantPolynomial::chern_character(n)),
            _ => Err(format!("{class} is not an invariant polynomial")),
        }
    }

    fn stokes(&self, p: &mut Params) -> TaskResult {
        let poly = self.invariant(p)?;
        let max_k = self.max_k(p)?;
        let points = p.num("points", 10usize, None)?;
        let tol = self.tol(p, 1e-8)?;
        let threshold = p.num("threshold", 1e-6, None)?;
        let conn = self.connection(p)?;
        let r = stokes_check(&self.model, &conn, &poly, max_k, points, tol).map_err(|e| e.to_string())?;
        Ok(Outcome {
            status: pass_if(r.max_residual < threshold),
            result: to_value(&r),
            tolerance: Some(tol),
            threshold: Some(threshold),
        })
    }

    fn homotopy(&self, p: &mut Params) -> TaskResult {
        let poly = self.invariant(p)?;
        let max_k = self.max_k(p)?;
        let points = p.num("points", 10usize, None)?;
        let tol = self.tol(p, 1e-8)?;
        let threshold = p.num("threshold", 1e-6, None)?;
        let conn = ConnectionAssignment::trivial(self.model.chart_count(), self.q());
        let conn2 = self.scenario_connection()?;
        let h = connection_homotopy(&poly, &conn, &conn2, max_k, tol);
        let k1 = cw_cocycle("k", &poly, &conn, max_k, tol);
        let k2 = cw_cocycle("k'", &poly, &conn2, max_k, tol);
        let target = h.total_coboundary().sub(&k1.sub(&k2));
        let r = residual_sweep(&self.model, &target, max_k, points).map_err(|e| e.to_string())?;
        Ok(Outcome {
            status: pass_if(r.max_residual < threshold),
            result: to_value(&r),
            tolerance: Some(tol),
            threshold: Some(threshold),
        })
    }

    fn calibrate(&self, p: &mut Params) -> TaskResult {
        let q = self.q();
        let max_k = self.max_k(p)?;
        let points = p.num("points", 10usize, None)?;
        let tol = self.tol(p, 1e-8)?;
        let threshold = p.num("threshold", 1e-6, None)?;
        let cal = calibrate_sign(&self.model, max_k, points, tol, threshold).map_err(|e| e.to_string())?;
        let c1 = cw_cocycle("C1", &InvariantPolynomial::c(1), &ConnectionAssignment::trivial(self.model.chart_count(), q), max_k, tol);
        let sign = if (q * (q.saturating_sub(1)) / 2) % 2 == 0 { 1 } else { -1 };
        let product = u1(q).product(&c1.power(q)).scale(Expr::int(sign));
        let r = residual_sweep(&self.model, &product.sub(&gv(q)), max_k, points).map_err(|e| e.to_string())?;
        let ok = cal.fitted == Some(SIGN_FLAG) && cal.delta_u1 < 1e-10 && r.max_residual < threshold;
        Ok(Outcome {
            status: pass_if(ok),
            result: json!({ "calibration": cal, "product_vs_gv": r, "sign_flag": SIGN_FLAG }),
            tolerance: Some(tol),
            threshold: Some(threshold),
        })
    }

    fn triple_values(&self, m: &OneObjectModel, idx: &[usize], tol: f64) -> Result<(f64, f64), String> {
        let s = m.string(idx);
        let t = thurston_gv(&s.links[0].map, &s.links[1].map, &s.links[2].map, tol).map_err(|e| format!("{s}: {e}"))?;
        let c = collapse_cocycle(m, &gv(1), 3, &s, tol).map_err(|e| format!("{s}: {e}"))?;
        Ok((t, c.value))
    }

    fn triples(&self, m: &OneObjectModel, text: &str) -> Result<Vec<Vec<usize>>, String> {
        text.split(';')
            .map(|t| {
                let names: Vec<&str> = t.split(',').map(str::trim).collect();
                if names.len() != 3 {
                    return Err(format!("'{t}' is not a triple"));
                }
                names.iter().map(|n| m.index(n).map_err(|e| e.to_string())).collect()
            })
            .collect()
    }

    fn thurston(&self, p: &mut Params) -> TaskResult {
        let m = self.one_object("thurston")?;
        if m.dim() != 1 {
            return Err("thurston needs q = 1".into());
        }
        let text = p.opt("triple").ok_or("missing triple")?;
        let triples = self.triples(m, &text)?;
        let tol = self.tol(p, 1e-10)?;
        let threshold = p.num("threshold", 1e-5, None)?;
        let reference = p.opt("reference").map(|r| r.parse::<f64>()).transpose().map_err(|e| e.to_string())?;
        let mut tv = Vec::new();
        let mut cv = Vec::new();
        for t in &triples {
            let (a, b) = self.triple_values(m, t, tol)?;
            tv.push(a);
            cv.push(b);
        }
        let disc = tv.iter().zip(&cv).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let ref_err = reference.map(|r| tv.iter().chain(&cv).map(|v| (v - r).abs()).fold(0.0, f64::max));
        let ok = disc < threshold && ref_err.is_none_or(|e| e < threshold);
        Ok(Outcome {
            status: pass_if(ok),
            result: json!({
                "triples": self.triple_names(m, &triples),
                "thurston_values": tv,
                "collapse_values": cv,
                "max_discrepancy": disc,
                "reference": reference,
                "reference_error": ref_err,
            }),
            tolerance: Some(tol),
            threshold: Some(threshold),
        })
    }

    fn triple_names(&self, m: &OneObjectModel, triples: &[Vec<usize>]) -> Vec<String> {
        triples.iter().map(|t| m.string(t).to_string()).collect()
    }

    fn collapse_check(&self, p: &mut Params) -> TaskResult {
        let m = self.one_object("collapse-check")?;
        if m.dim() != 1 {
            return Err("collapse-check needs q = 1".into());
        }
        let samples = p.num("samples", 20usize, None)?;
        let tol = self.tol(p, 1e-10)?;
        let threshold = p.num("threshold", 1e-5, None)?;
        let cocycle_threshold = p.num("cocycle-threshold", 1e-4, None)?;
        let triples = match p.opt("triple") {
            Some(t) => self.triples(m, &t)?,
            None => m.sample_tuples(3, samples, self.model.seed),
        };
        let mut tv = Vec::new();
        let mut cv = Vec::new();
        for t in &triples {
            let (a, b) = self.triple_values(m, t, tol)?;
            tv.push(a);
            cv.push(b);
        }
        let disc = tv.iter().zip(&cv).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let tuples = m.sample_tuples(4, samples, self.model.seed ^ 0x5eed);
        let cech = cech_cocycle_check(
            m,
            |s| Ok(collapse_cocycle(m, &gv(1), 3, s, tol)?.value),
            3,
            &tuples,
        )
        .map_err(|e| e.to_string())?;
        let ok = disc < threshold && cech.max_residual < cocycle_threshold;
        Ok(Outcome {
            status: pass_if(ok),
            result: json!({
                "triples": self.triple_names(m, &triples),
                "thurston_values": tv,
                "collapse_values": cv,
                "max_discrepancy": disc,
                "cocycle": cech,
            }),
            tolerance: Some(tol),
            threshold: Some(threshold),
        })
    }
}

/// Runs `tasks` (the scenario's own when `None`) in order.
pub fn run(scenario: &Scenario, tasks: Option<&[Task]>, overrides: &Overrides) -> Report {
    let inner = scenario.presentation.model();
    let seed = overrides.seed.unwrap_or_else(|| inner.seed());
    let ctx = Ctx {
        scenario,
        model: Seeded { inner, seed },
        overrides,
    };
    let tasks = tasks.unwrap_or(&scenario.tasks);
    let mut reports = Vec::new();
    for t in tasks {
        let mut p = Params {
            given: &t.params,
            used: BTreeMap::new(),
        };
        let out = match t.command {
            Command::Validate => ctx.validate(&mut p),
            Command::Betti => ctx.betti(&mut p),
            Command::Duality => ctx.duality(&mut p),
            Command::Basic => ctx.basic(&mut p),
            Command::Cocycle => ctx.cocycle(&mut p),
            Command::Stokes => ctx.stokes(&mut p),
            Command::Homotopy => ctx.homotopy(&mut p),
            Command::Calibrate => ctx.calibrate(&mut p),
            Command::Thurston => ctx.thurston(&mut p),
            Command::CollapseCheck => ctx.collapse_check(&mut p),
        };
        let mut parameters = t.params.clone();
        parameters.extend(p.used);
        reports.push(match out {
            Ok(o) => TaskReport {
                command: t.command.name().into(),
                parameters,
                tolerance: o.tolerance,
                threshold: o.threshold,
                status: o.status,
                result: o.result,
                message: None,
            },
            Err(msg) => TaskReport {
                command: t.command.name().into(),
                parameters,
                tolerance: None,
                threshold: None,
                status: Status::Error,
                result: Value::Null,
                message: Some(msg),
            },
        });
    }
    let status = if reports.iter().any(|r| r.status == Status::Error) {
        Status::Error
    } else if reports.iter().any(|r| r.status == Status::Fail) {
        Status::Fail
    } else {
        Status::Pass
    };
    Report {
        scenario: scenario.name.clone(),
        engine_version: env!("CARGO_PKG_VERSION").into(),
        seed,
        sign_flag: SIGN_FLAG,
        status,
        tasks: reports,
    }
}
