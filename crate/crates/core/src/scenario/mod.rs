//! Scenario files: a presentation, an optional connection and a task list.
//!
//! ```text
//! [scenario]
//! name = z2-reflection
//! kind = category            # or one-object
//!
//! [chart]
//! id=U, dim=1, box=[-2,2]
//!
//! [embedding]
//! id=g, src=U, dst=U, map="-x1"
//!
//! [compose]
//! g.g=id_U
//!
//! [connection]
//! chart=*, row=1, col=1, form="x1"
//!
//! [task]
//! command=betti, max-degree=8, expect="1,0,0,0,0,0,0,0,0"
//! ```

mod fixtures;
mod run;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use thiserror::Error;

use crate::category::{Arrow, CategoryPresentation, Chart, Morphism};
use crate::chernweil::{ArrowModel, ConnectionAssignment};
use crate::collapse::OneObjectModel;
use crate::symexpr::{parse_expr, BoxBounds, DifferentialForm, Env, MatrixForm, SmoothMap, SymError, Var, VarContext};

pub use fixtures::{fixture_names, fixture_source};
pub use run::{run, Overrides, Report, Status, TaskReport};

pub const MAX_CODIMENSION: usize = 4;
pub const MAX_DEGREE: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },
    #[error("line {line}, column {column}: unknown {what} '{id}'")]
    Resolve { line: usize, column: usize, what: &'static str, id: String },
    #[error("invalid presentation:\n{}", .0.join("\n"))]
    Invalid(Vec<String>),
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Command {
    Validate,
    Betti,
    Duality,
    Basic,
    Cocycle,
    Stokes,
    Homotopy,
    Calibrate,
    Thurston,
    CollapseCheck,
}

impl Command {
    pub const ALL: [Command; 10] = [
        Command::Validate,
        Command::Betti,
        Command::Duality,
        Command::Basic,
        Command::Cocycle,
        Command::Stokes,
        Command::Homotopy,
        Command::Calibrate,
        Command::Thurston,
        Command::CollapseCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Betti => "betti",
            Command::Duality => "duality",
            Command::Basic => "basic",
            Command::Cocycle => "cocycle",
            Command::Stokes => "stokes",
            Command::Homotopy => "homotopy",
            Command::Calibrate => "calibrate",
            Command::Thurston => "thurston",
            Command::CollapseCheck => "collapse-check",
        }
    }

    pub fn parse(s: &str) -> Option<Command> {
        Command::ALL.into_iter().find(|c| c.name() == s)
    }

    /// Parameter keys accepted in `[task]` lines.
    pub fn keys(self) -> &'static [&'static str] {
        match self {
            Command::Validate => &[],
            Command::Betti => &["coefficient", "max-degree", "expect"],
            Command::Duality => &["max-degree"],
            Command::Basic => &["form-degree", "poly-degree", "expect"],
            Command::Cocycle => &["class", "check-closed", "expect-zero", "max-k", "points", "tol", "threshold", "connection"],
            Command::Stokes => &["class", "max-k", "points", "tol", "threshold", "connection"],
            Command::Homotopy => &["class", "max-k", "points", "tol", "threshold"],
            Command::Calibrate => &["max-k", "points", "tol", "threshold"],
            Command::Thurston => &["triple", "reference", "tol", "threshold"],
            Command::CollapseCheck => &["triple", "samples", "tol", "threshold", "cocycle-threshold"],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Task {
    pub command: Command,
    pub params: BTreeMap<String, String>,
    pub line: usize,
}

#[derive(Clone, Debug)]
pub enum Presentation {
    Category(CategoryPresentation),
    OneObject(OneObjectModel),
}

impl Presentation {
    pub fn model(&self) -> &dyn ArrowModel {
        match self {
            Presentation::Category(p) => p,
            Presentation::OneObject(m) => m,
        }
    }

    pub fn dim(&self) -> usize {
        self.model().dim()
    }

    pub fn category(&self) -> Option<&CategoryPresentation> {
        match self {
            Presentation::Category(p) => Some(p),
            Presentation::OneObject(_) => None,
        }
    }

    pub fn one_object(&self) -> Option<&OneObjectModel> {
        match self {
            Presentation::OneObject(m) => Some(m),
            Presentation::Category(_) => None,
        }
    }

    /// Charts and morphisms, identities included.
    pub fn counts(&self) -> (usize, usize) {
        match self {
            Presentation::Category(p) => (p.charts().len(), p.charts().len() + p.arrows().len()),
            Presentation::OneObject(m) => (1, m.maps().len() + 1),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub presentation: Presentation,
    /// From the `[connection]` section; `None` when absent.
    pub connection: Option<ConnectionAssignment>,
    pub tasks: Vec<Task>,
}

/// Reads a scenario file, or a bundled fixture by name when no such file
/// exists, and validates it.
pub fn load_scenario(path: &str) -> Result<Scenario, ScenarioError> {
    let s = read_scenario(path)?;
    let issues = validation_issues(&s);
    if issues.is_empty() {
        Ok(s)
    } else {
        Err(ScenarioError::Invalid(issues))
    }
}

/// Reads and parses without semantic validation.
pub fn read_scenario(path: &str) -> Result<Scenario, ScenarioError> {
    if !Path::new(path).exists() {
        if let Some(src) = fixture_source(path) {
            return parse_scenario(src);
        }
    }
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
        path: path.into(),
        msg: e.to_string(),
    })?;
    parse_scenario(&text)
}

pub fn validation_issues(s: &Scenario) -> Vec<String> {
    match &s.presentation {
        Presentation::Category(p) => p
            .validate()
            .issues
            .iter()
            .map(|i| format!("{:?}: {}", i.kind, i.message))
            .collect(),
        // checked while parsing
        Presentation::OneObject(_) => Vec::new(),
    }
}

struct Field {
    key: String,
    value: String,
    /// 1-based column of the value's first character (inside quotes).
    column: usize,
    key_column: usize,
}

struct Item {
    line: usize,
    fields: Vec<Field>,
}

impl Item {
    fn get(&self, key: &str) -> Option<&Field> {
        self.fields.iter().find(|f| f.key == key)
    }

    fn require(&self, key: &str) -> Result<&Field, ScenarioError> {
        self.get(key).ok_or_else(|| ScenarioError::Parse {
            line: self.line,
            column: 1,
            msg: format!("missing '{key}'"),
        })
    }

    fn only(&self, keys: &[&str]) -> Result<(), ScenarioError> {
        for f in &self.fields {
            if !keys.contains(&f.key.as_str()) {
                return Err(ScenarioError::Parse {
                    line: self.line,
                    column: f.key_column,
                    msg: format!("unexpected key '{}'", f.key),
                });
            }
        }
        Ok(())
    }
}

fn perr(line: usize, column: usize, msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Parse { line, column, msg: msg.into() }
}

/// Splits `k=v, k="v, w", box=[a,b;c,d]` at top-level commas.
fn parse_item(text: &str, line: usize, offset: usize) -> Result<Item, ScenarioError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut pieces: Vec<(usize, usize)> = Vec::new();
    let (mut start, mut depth, mut quoted) = (0, 0i32, false);
    for &(i, c) in &chars {
        match c {
            '"' => quoted = !quoted,
            '[' | '(' if !quoted => depth += 1,
            ']' | ')' if !quoted => depth -= 1,
            ',' if !quoted && depth == 0 => {
                pieces.push((start, i));
                start = i + 1;
            }
            _ => {}
        }
    }
    if quoted {
        return Err(perr(line, offset + text.len() + 1, "unterminated string"));
    }
    pieces.push((start, text.len()));
    let mut fields = Vec::new();
    for (a, b) in pieces {
        let raw = &text[a..b];
        let lead = raw.len() - raw.trim_start().len();
        let piece = raw.trim();
        let col = offset + a + lead + 1;
        if piece.is_empty() {
            return Err(perr(line, col, "empty field"));
        }
        let Some(eq) = piece.find('=') else {
            return Err(perr(line, col, format!("expected key=value, found '{piece}'")));
        };
        let key = piece[..eq].trim().to_string();
        let rest = &piece[eq + 1..];
        let vlead = rest.len() - rest.trim_start().len();
        let mut value = rest.trim().to_string();
        let mut vcol = col + eq + 1 + vlead;
        if value.starts_with('"') {
            if value.len() < 2 || !value.ends_with('"') {
                return Err(perr(line, vcol, "malformed quoted value"));
            }
            value = value[1..value.len() - 1].to_string();
            vcol += 1;
        }
        if key.is_empty() {
            return Err(perr(line, col, "empty key"));
        }
        if fields.iter().any(|f: &Field| f.key == key) {
            return Err(perr(line, col, format!("duplicate key '{key}'")));
        }
        fields.push(Field {
            key,
            value,
            column: vcol,
            key_column: col,
        });
    }
    Ok(Item { line, fields })
}

fn sym_err(e: SymError, line: usize, column: usize) -> ScenarioError {
    match e {
        SymError::Parse { pos, msg } => perr(line, column + pos, msg),
        SymError::UnknownVariable { name, pos } => perr(line, column + pos, format!("undeclared variable '{name}'")),
        other => perr(line, column, other.to_string()),
    }
}

fn parse_number(s: &str, line: usize, column: usize) -> Result<f64, ScenarioError> {
    let e = parse_expr(s, &VarContext::chart(0)).map_err(|e| sym_err(e, line, column))?;
    e.eval(&Env::new()).map_err(|e| perr(line, column, e.to_string()))
}

fn parse_box(f: &Field, line: usize) -> Result<BoxBounds, ScenarioError> {
    let v = f.value.trim();
    if !(v.starts_with('[') && v.ends_with(']')) {
        return Err(perr(line, f.column, "box must look like [a1,b1;a2,b2]"));
    }
    let mut out = Vec::new();
    let mut col = f.column + 1;
    for interval in v[1..v.len() - 1].split(';') {
        let ends: Vec<&str> = interval.split(',').collect();
        if ends.len() != 2 {
            return Err(perr(line, col, format!("interval '{interval}' needs two endpoints")));
        }
        let a = parse_number(ends[0], line, col)?;
        let b = parse_number(ends[1], line, col + ends[0].len() + 1)?;
        if !(a < b) {
            return Err(perr(line, col, format!("empty interval [{a},{b}]")));
        }
        out.push((a, b));
        col += interval.len() + 1;
    }
    Ok(out)
}

fn parse_usize(f: &Field, line: usize) -> Result<usize, ScenarioError> {
    f.value
        .trim()
        .parse()
        .map_err(|_| perr(line, f.column, format!("'{}' is not a nonnegative integer", f.value)))
}

#[derive(Default)]
struct Sections {
    header: Vec<(usize, String, String)>,
    chart: Vec<Item>,
    embedding: Vec<Item>,
    /// `(line, column, text)`.
    compose: Vec<(usize, usize, String)>,
    connection: Vec<Item>,
    task: Vec<Item>,
    has_compose: bool,
}

fn split_sections(text: &str) -> Result<Sections, ScenarioError> {
    let mut s = Sections::default();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let offset = raw.len() - raw.trim_start().len();
        if trimmed.starts_with('[') && trimmed.ends_with(']') && !trimmed.contains('=') {
            let name = trimmed[1..trimmed.len() - 1].trim().to_string();
            match name.as_str() {
                "scenario" | "chart" | "embedding" | "connection" | "task" => {}
                "compose" => s.has_compose = true,
                _ => return Err(perr(line, offset + 2, format!("unknown section '{name}'"))),
            }
            current = Some(name);
            continue;
        }
        let Some(section) = current.as_deref() else {
            return Err(perr(line, offset + 1, "content before the first section"));
        };
        match section {
            "scenario" => {
                let Some(eq) = trimmed.find('=') else {
                    return Err(perr(line, offset + 1, "expected key = value"));
                };
                s.header
                    .push((line, trimmed[..eq].trim().to_string(), trimmed[eq + 1..].trim().to_string()));
            }
            "compose" => s.compose.push((line, offset + 1, trimmed.to_string())),
            _ => {
                let item = parse_item(trimmed, line, offset)?;
                match section {
                    "chart" => s.chart.push(item),
                    "embedding" => s.embedding.push(item),
                    "connection" => s.connection.push(item),
                    _ => s.task.push(item),
                }
            }
        }
    }
    Ok(s)
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let sec = split_sections(text)?;
    let mut name = None;
    let mut description = String::new();
    let mut kind = "category".to_string();
    for (line, k, v) in &sec.header {
        match k.as_str() {
            "name" => name = Some(v.clone()),
            "description" => description = v.clone(),
            "kind" => {
                if v != "category" && v != "one-object" {
                    return Err(perr(*line, 1, format!("kind must be category or one-object, not '{v}'")));
                }
                kind = v.clone();
            }
            _ => return Err(perr(*line, 1, format!("unexpected key '{k}'"))),
        }
    }
    let name = name.ok_or_else(|| perr(1, 1, "missing [scenario] name"))?;

    let mut charts: Vec<Chart> = Vec::new();
    let mut chart_ids: HashMap<String, usize> = HashMap::new();
    for item in &sec.chart {
        item.only(&["id", "dim", "box"])?;
        let id = item.require("id")?;
        let bf = item.require("box")?;
        let bounds = parse_box(bf, item.line)?;
        if let Some(d) = item.get("dim") {
            if parse_usize(d, item.line)? != bounds.len() {
                return Err(perr(item.line, d.column, format!("dim {} but the box has {} intervals", d.value, bounds.len())));
            }
        }
        if chart_ids.insert(id.value.clone(), charts.len()).is_some() {
            return Err(perr(item.line, id.column, format!("duplicate chart '{}'", id.value)));
        }
        charts.push(Chart {
            id: id.value.clone(),
            bounds,
        });
    }
    let q = charts
        .first()
        .map(|c| c.bounds.len())
        .ok_or_else(|| perr(1, 1, "no charts declared"))?;
    for (c, item) in charts.iter().zip(&sec.chart) {
        if c.bounds.len() != q {
            return Err(perr(item.line, 1, format!("chart '{}' has dimension {}, expected {q}", c.id, c.bounds.len())));
        }
    }
    if q > MAX_CODIMENSION {
        return Err(perr(sec.chart[0].line, 1, format!("codimension {q} exceeds {MAX_CODIMENSION}")));
    }

    let chart_of = |item: &Item, key: &str| -> Result<usize, ScenarioError> {
        let f = item.require(key)?;
        chart_ids.get(&f.value).copied().ok_or_else(|| ScenarioError::Resolve {
            line: item.line,
            column: f.column,
            what: "chart",
            id: f.value.clone(),
        })
    };

    let mut arrows: Vec<Arrow> = Vec::new();
    let mut arrow_ids: HashMap<String, usize> = HashMap::new();
    for item in &sec.embedding {
        item.only(&["id", "src", "dst", "map"])?;
        let id = item.require("id")?;
        let (src, dst) = (chart_of(item, "src")?, chart_of(item, "dst")?);
        let mf = item.require("map")?;
        let mut comps = Vec::new();
        let mut col = mf.column;
        for part in mf.value.split(';') {
            comps.push(parse_expr(part, &VarContext::chart(q)).map_err(|e| sym_err(e, item.line, col))?);
            col += part.len() + 1;
        }
        if comps.len() != q {
            return Err(perr(item.line, mf.column, format!("{} components for codimension {q}", comps.len())));
        }
        let map = SmoothMap::new(comps, charts[src].bounds.clone(), charts[dst].bounds.clone())
            .map_err(|e| perr(item.line, mf.column, e.to_string()))?;
        if id.value.starts_with("id_") || arrow_ids.insert(id.value.clone(), arrows.len()).is_some() {
            return Err(perr(item.line, id.column, format!("duplicate or reserved arrow id '{}'", id.value)));
        }
        arrows.push(Arrow {
            id: id.value.clone(),
            src,
            dst,
            map,
        });
    }

    let mut table = Vec::new();
    for &(line, col, ref text) in &sec.compose {
        let resolve = |s: &str, at: usize| -> Result<Morphism, ScenarioError> {
            let s = s.trim();
            if let Some(c) = s.strip_prefix("id_") {
                if let Some(&i) = chart_ids.get(c) {
                    return Ok(Morphism::Identity(i));
                }
            }
            arrow_ids.get(s).map(|&i| Morphism::Arrow(i)).ok_or_else(|| ScenarioError::Resolve {
                line,
                column: at,
                what: "arrow",
                id: s.to_string(),
            })
        };
        let (Some(eq), Some(dot)) = (text.find('='), text.find('.')) else {
            return Err(perr(line, col, "expected g.f=h"));
        };
        if dot > eq {
            return Err(perr(line, col, "expected g.f=h"));
        }
        let g = resolve(&text[..dot], col)?;
        let f = resolve(&text[dot + 1..eq], col + dot + 1)?;
        let h = resolve(&text[eq + 1..], col + eq + 1)?;
        table.push(((g, f), h));
    }

    let presentation = if kind == "one-object" {
        if charts.len() != 1 || !table.is_empty() {
            return Err(perr(1, 1, "a one-object scenario has one chart and no [compose] entries"));
        }
        let maps = arrows.into_iter().map(|a| (a.id, a.map)).collect();
        Presentation::OneObject(
            OneObjectModel::new(charts[0].bounds.clone(), maps).map_err(|e| perr(sec.chart[0].line, 1, e.to_string()))?,
        )
    } else {
        Presentation::Category(CategoryPresentation::new(charts, arrows, table).map_err(|e| perr(1, 1, e.to_string()))?)
    };

    let connection = if sec.connection.is_empty() {
        None
    } else {
        Some(parse_connection(&sec.connection, q, presentation.model().chart_count(), &chart_ids)?)
    };

    let mut tasks = Vec::new();
    for item in &sec.task {
        let cf = item.require("command")?;
        let command = Command::parse(&cf.value).ok_or_else(|| perr(item.line, cf.column, format!("unknown command '{}'", cf.value)))?;
        let mut params = BTreeMap::new();
        for f in &item.fields {
            if f.key == "command" {
                continue;
            }
            if !command.keys().contains(&f.key.as_str()) {
                return Err(perr(item.line, f.key_column, format!("'{}' does not take '{}'", command.name(), f.key)));
            }
            params.insert(f.key.clone(), f.value.clone());
        }
        let task = Task {
            command,
            params,
            line: item.line,
        };
        check_ranges(&task, q).map_err(|msg| perr(item.line, 1, msg))?;
        tasks.push(task);
    }

    Ok(Scenario {
        name,
        description,
        presentation,
        connection,
        tasks,
    })
}

fn parse_connection(
    items: &[Item],
    q: usize,
    charts: usize,
    chart_ids: &HashMap<String, usize>,
) -> Result<ConnectionAssignment, ScenarioError> {
    let vars = Var::chart_vars(q);
    let mut entries: Vec<Vec<DifferentialForm>> = vec![vec![DifferentialForm::zero(&vars, 1); q * q]; charts];
    for item in items {
        item.only(&["chart", "row", "col", "form"])?;
        let cf = item.require("chart")?;
        let targets: Vec<usize> = if cf.value == "*" {
            (0..charts).collect()
        } else {
            vec![*chart_ids.get(&cf.value).ok_or_else(|| ScenarioError::Resolve {
                line: item.line,
                column: cf.column,
                what: "chart",
                id: cf.value.clone(),
            })?]
        };
        let idx = |key: &str| -> Result<usize, ScenarioError> {
            match item.get(key) {
                None => Ok(0),
                Some(f) => {
                    let v = parse_usize(f, item.line)?;
                    if v == 0 || v > q {
                        return Err(perr(item.line, f.column, format!("{key} must be in 1..={q}")));
                    }
                    Ok(v - 1)
                }
            }
        };
        let (r, c) = (idx("row")?, idx("col")?);
        let ff = item.require("form")?;
        let mut coeffs = Vec::new();
        let mut col = ff.column;
        for part in ff.value.split(';') {
            coeffs.push(parse_expr(part, &VarContext::chart(q)).map_err(|e| sym_err(e, item.line, col))?);
            col += part.len() + 1;
        }
        if coeffs.len() != q {
            return Err(perr(item.line, ff.column, format!("a 1-form needs {q} coefficients")));
        }
        let form = DifferentialForm::from_terms(&vars, 1, coeffs.into_iter().enumerate().map(|(j, e)| (vec![j], e)))
            .map_err(|e| perr(item.line, ff.column, e.to_string()))?;
        for &t in &targets {
            entries[t][r * q + c] = form.clone();
        }
    }
    let mut conn = ConnectionAssignment::trivial(charts, q);
    for (i, e) in entries.into_iter().enumerate() {
        let m = MatrixForm::from_entries(q, e).map_err(|e| perr(items[0].line, 1, e.to_string()))?;
        if !m.is_zero() {
            conn.set(i, m).map_err(|e| perr(items[0].line, 1, e.to_string()))?;
        }
    }
    Ok(conn)
}

fn check_ranges(t: &Task, q: usize) -> Result<(), String> {
    let num = |k: &str| -> Result<Option<usize>, String> {
        t.params
            .get(k)
            .map(|v| v.parse::<usize>().map_err(|_| format!("{k}: '{v}' is not a nonnegative integer")))
            .transpose()
    };
    if let Some(n) = num("max-degree")? {
        if n > MAX_DEGREE {
            return Err(format!("max-degree {n} exceeds {MAX_DEGREE}"));
        }
    }
    if let Some(k) = num("max-k")? {
        if k > q + 2 {
            return Err(format!("max-k {k} exceeds q+2 = {}", q + 2));
        }
    }
    for key in ["points", "samples", "form-degree", "poly-degree"] {
        num(key)?;
    }
    for key in ["tol", "threshold", "cocycle-threshold", "reference"] {
        if let Some(v) = t.params.get(key) {
            v.parse::<f64>().map_err(|_| format!("{key}: '{v}' is not a number"))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_fixtures_parse_and_validate() {
        for name in fixture_names() {
            let s = load_scenario(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(s.name, name);
        }
    }

    #[test]
    fn z2_counts() {
        let s = load_scenario("z2-reflection").unwrap();
        assert_eq!(s.presentation.counts(), (1, 2));
    }

    #[test]
    fn undeclared_dst_names_the_id() {
        let text = "[scenario]\nname = bad\n[chart]\nid=U, dim=1, box=[0,1]\n[embedding]\nid=f, src=U, dst=V, map=\"x1/2\"\n";
        let err = parse_scenario(text).unwrap_err();
        assert_eq!(
            err,
            ScenarioError::Resolve {
                line: 6,
                column: 18,
                what: "chart",
                id: "V".into()
            }
        );
        assert!(err.to_string().contains("'V'"));
    }

    #[test]
    fn expression_errors_carry_columns() {
        let text = "[scenario]\nname = bad\n[chart]\nid=U, dim=1, box=[0,1]\n[embedding]\nid=f, src=U, dst=U, map=\"x1*y\"\n";
        match parse_scenario(text).unwrap_err() {
            ScenarioError::Parse { line, column, msg } => {
                assert_eq!((line, column), (6, 29));
                assert!(msg.contains("'y'"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_section_and_key() {
        let e = parse_scenario("[scenario]\nname=a\n[charts]\n").unwrap_err();
        assert!(matches!(e, ScenarioError::Parse { line: 3, .. }));
        let e = parse_scenario("[scenario]\nname=a\n[chart]\nid=U, box=[0,1], colour=red\n").unwrap_err();
        assert!(matches!(e, ScenarioError::Parse { line: 4, column: 18, .. }), "{e:?}");
    }

    #[test]
    fn invalid_table_is_listed() {
        let text = "[scenario]\nname = z2bad\n[chart]\nid=U, dim=1, box=[-2,2]\n[embedding]\nid=g, src=U, dst=U, map=\"-x1\"\n[compose]\ng.g=g\n";
        assert!(parse_scenario(text).is_ok());
        let path = std::env::temp_dir().join("leafspace-z2bad.scn");
        std::fs::write(&path, text).unwrap();
        match load_scenario(path.to_str().unwrap()).unwrap_err() {
            ScenarioError::Invalid(issues) => assert!(issues.iter().any(|i| i.contains("g.g=g"))),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn task_ranges_enforced() {
        let base = "[scenario]\nname = a\n[chart]\nid=U, dim=1, box=[0,1]\n[task]\n";
        assert!(parse_scenario(&format!("{base}command=betti, max-degree=13\n")).is_err());
        assert!(parse_scenario(&format!("{base}command=cocycle, class=gv, max-k=4\n")).is_err());
        assert!(parse_scenario(&format!("{base}command=cocycle, class=gv, max-k=3\n")).is_ok());
        assert!(parse_scenario(&format!("{base}command=betti, class=gv\n")).is_err());
    }

    #[test]
    fn connection_section() {
        let s = load_scenario("mobius-elliptic3").unwrap();
        let c = s.connection.unwrap();
        assert!(!c.is_trivial());
        assert_eq!(c.get(2).trace().unwrap().to_string(), c.get(0).trace().unwrap().to_string());
    }

    #[test]
    fn box_with_rationals() {
        let s = load_scenario("mobius-elliptic3").unwrap();
        let b = s.presentation.model().chart_bounds(1);
        assert_eq!(b, &vec![(-2.0 / 3.0, -1.0 / 3.0)]);
    }
}
