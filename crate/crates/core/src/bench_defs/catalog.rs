use super::expr::{parse_expression, Expr, ParseError};
use super::sampling::{SamplingSpec, SpecError};
use std::path::Path;

/// The shipped benchmark manifest.
pub const BUILTIN_MANIFEST: &str = include_str!("../../data/benchmarks.txt");

/// One synthetic benchmark: objective plus per-variable input specs.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkDef {
    pub name: String,
    pub arity: usize,
    pub objective: Expr,
    pub objective_text: String,
    /// One spec per variable, `train[j]` for `x<j+1>`.
    pub train: Vec<SamplingSpec>,
    pub test: Option<Vec<SamplingSpec>>,
    pub exclusion: Option<String>,
}

impl BenchmarkDef {
    pub fn excluded(&self) -> bool {
        self.exclusion.is_some()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("line {line}: objective: {source}")]
    Objective {
        line: usize,
        #[source]
        source: ParseError,
    },
    #[error("line {line}: {source}")]
    Spec {
        line: usize,
        #[source]
        source: SpecError,
    },
    #[error("duplicate benchmark `{0}`")]
    Duplicate(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    defs: Vec<BenchmarkDef>,
}

impl Catalog {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_MANIFEST).expect("shipped manifest parses")
    }

    pub fn load(path: &Path) -> Result<Self, CatalogError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self, CatalogError> {
        let mut defs: Vec<BenchmarkDef> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let def = parse_record(content, line)?;
            if defs.iter().any(|d| d.name == def.name) {
                return Err(CatalogError::Duplicate(def.name));
            }
            defs.push(def);
        }
        Ok(Catalog { defs })
    }

    pub fn defs(&self) -> &[BenchmarkDef] {
        &self.defs
    }

    pub fn get(&self, name: &str) -> Option<&BenchmarkDef> {
        self.defs.iter().find(|d| d.name == name)
    }

    pub fn included(&self) -> impl Iterator<Item = &BenchmarkDef> {
        self.defs.iter().filter(|d| !d.excluded())
    }

    pub fn excluded(&self) -> impl Iterator<Item = &BenchmarkDef> {
        self.defs.iter().filter(|d| d.excluded())
    }
}

fn parse_record(content: &str, line: usize) -> Result<BenchmarkDef, CatalogError> {
    let fail = |message: String| CatalogError::Line { line, message };
    let fields: Vec<&str> = content.split('|').map(str::trim).collect();
    if !(5..=6).contains(&fields.len()) {
        return Err(fail(format!("expected 5 or 6 fields, found {}", fields.len())));
    }
    let name = fields[0].to_owned();
    if name.is_empty() {
        return Err(fail("empty name".into()));
    }
    let arity: usize = fields[1]
        .parse()
        .map_err(|_| fail(format!("bad arity `{}`", fields[1])))?;
    if arity == 0 {
        return Err(fail("arity must be positive".into()));
    }
    let objective =
        parse_expression(fields[2]).map_err(|source| CatalogError::Objective { line, source })?;
    if objective.max_var() > arity {
        return Err(fail(format!(
            "objective uses x{} but arity is {arity}",
            objective.max_var()
        )));
    }
    let train = parse_inputs(fields[3], arity, line)?;
    let test = if fields[4].eq_ignore_ascii_case("none") {
        None
    } else {
        Some(parse_inputs(fields[4], arity, line)?)
    };
    let exclusion = match fields.get(5) {
        None => None,
        Some(f) => Some(
            f.strip_prefix("excluded:")
                .map(|r| r.trim().to_owned())
                .ok_or_else(|| fail(format!("expected `excluded: <reason>`, found `{f}`")))?,
        ),
    };
    Ok(BenchmarkDef {
        name,
        arity,
        objective,
        objective_text: fields[2].to_owned(),
        train,
        test,
        exclusion,
    })
}

/// `SPEC` for every variable, or `x1,x2: SPEC; x3: SPEC`.
fn parse_inputs(text: &str, arity: usize, line: usize) -> Result<Vec<SamplingSpec>, CatalogError> {
    let fail = |message: String| CatalogError::Line { line, message };
    let spec = |s: &str| SamplingSpec::parse(s).map_err(|source| CatalogError::Spec { line, source });
    if !text.contains(':') {
        return Ok(vec![spec(text)?; arity]);
    }
    let mut out: Vec<Option<SamplingSpec>> = vec![None; arity];
    for group in text.split(';') {
        let (vars, s) = group
            .split_once(':')
            .ok_or_else(|| fail(format!("missing `:` in `{group}`")))?;
        let s = spec(s)?;
        for v in vars.split(',').map(str::trim) {
            let idx: usize = v
                .strip_prefix('x')
                .and_then(|d| d.parse().ok())
                .filter(|&i| (1..=arity).contains(&i))
                .ok_or_else(|| fail(format!("bad variable `{v}`")))?;
            if out[idx - 1].replace(s).is_some() {
                return Err(fail(format!("variable {v} given twice")));
            }
        }
    }
    out.into_iter()
        .enumerate()
        .map(|(j, s)| s.ok_or_else(|| fail(format!("no inputs for x{}", j + 1))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_catalog_shape() {
        let c = Catalog::builtin();
        assert_eq!(c.defs().len(), 57);
        let excluded: Vec<&str> = c.excluded().map(|d| d.name.as_str()).collect();
        assert_eq!(
            excluded,
            ["Korns-2", "Korns-3", "Korns-5", "Korns-6", "Korns-8", "Korns-9", "Korns-10"]
        );
        assert_eq!(c.included().count(), 50);
        for d in c.defs() {
            assert_eq!(d.train.len(), d.arity, "{}", d.name);
            if let Some(t) = &d.test {
                assert_eq!(t.len(), d.arity, "{}", d.name);
            }
            assert!(d.objective.max_var() <= d.arity, "{}", d.name);
        }
    }

    #[test]
    fn korns1_objective() {
        let c = Catalog::builtin();
        let k1 = c.get("Korns-1").unwrap();
        assert_eq!(k1.objective.eval(&[7.0, 7.0, 7.0, 0.0, 7.0]), Ok(1.57));
    }

    #[test]
    fn mixed_groups() {
        let c = Catalog::parse("K5 | 3 | x1*x3/x2 | x1,x2: U[-1,1,10]; x3: U[1,2,10] | None").unwrap();
        let d = &c.defs()[0];
        assert_eq!(d.train[2], SamplingSpec::uniform(1.0, 2.0, 10).unwrap());
        assert!(d.test.is_none());
    }

    #[test]
    fn record_errors() {
        assert!(matches!(
            Catalog::parse("A | 1 | x2 | U[0,1,5] | None"),
            Err(CatalogError::Line { line: 1, .. })
        ));
        assert!(matches!(
            Catalog::parse("\nA | 1 | foo(x1) | U[0,1,5] | None"),
            Err(CatalogError::Objective { line: 2, .. })
        ));
        assert!(Catalog::parse("A | 2 | x1 | x1: U[0,1,5] | None").is_err());
        assert!(Catalog::parse("A | 1 | x1 | x1: U[0,1,5]; x1: U[0,1,5] | None").is_err());
        assert!(Catalog::parse("A | 1 | x1 | U[0,1,5] | None | maybe").is_err());
        assert!(matches!(
            Catalog::parse("A | 1 | x1 | U[0,1,5] | None\nA | 1 | x1 | U[0,1,5] | None"),
            Err(CatalogError::Duplicate(_))
        ));
    }
}
