//! Versioned JSON files for scenarios, instances and solutions.
//!
//! Floats are written in scientific notation with at least 15 significant
//! digits and always round-trip exactly.

use std::fs;
use std::io;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::generate::ScenarioSpec;
use crate::its::ItsTrace;
use crate::model::{Catalog, Decision, Instance, PriceTable, UtilityMode};
use crate::solution::{Certificate, Method, Solution};

pub const INSTANCE_SCHEMA: &str = "jdpew-instance/1";
pub const SOLUTION_SCHEMA: &str = "jdpew-solution/1";
pub const SCENARIO_SCHEMA: &str = "jdpew-scenario/1";

const MIN_DIGITS: usize = 15;

/// Shortest exact decimal form of `x`, mantissa padded to 15 significant digits.
pub fn format_number(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let s = format!("{x:e}");
    let (mantissa, exp) = s.split_once('e').unwrap();
    let (sign, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => ("-", rest),
        None => ("", mantissa),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    let pad = MIN_DIGITS.saturating_sub(int.len() + frac.len());
    format!("{sign}{int}.{frac}{}e{exp}", "0".repeat(pad))
}

/// Pretty printer that writes every float through [`format_number`].
struct Precise(PrettyFormatter<'static>);

macro_rules! delegate {
    ($($name:ident),*) => {
        $(fn $name<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
            self.0.$name(writer)
        })*
    };
    (first: $($name:ident),*) => {
        $(fn $name<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
            self.0.$name(writer, first)
        })*
    };
}

impl Formatter for Precise {
    delegate!(
        begin_array,
        end_array,
        end_array_value,
        begin_object,
        end_object,
        end_object_value,
        begin_object_value
    );
    delegate!(first: begin_array_value, begin_object_key);

    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if !value.is_finite() {
            return writer.write_all(b"null");
        }
        writer.write_all(format_number(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Serialize with two-space indentation and full-precision floats.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Precise(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serializer emits UTF-8"))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json(value)?)?;
    Ok(())
}

/// Parse a document after checking its `schema` field.
pub fn from_json<T: DeserializeOwned>(text: &str, schema: &str) -> Result<T> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let found = value.get("schema").and_then(|s| s.as_str()).unwrap_or("<missing>");
    if found != schema {
        return Err(Error::Schema {
            expected: schema.into(),
            found: found.into(),
        });
    }
    Ok(serde_json::from_value(value)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    schema: String,
    w: usize,
    m: usize,
    l: usize,
    lambda: Vec<f64>,
    u0: Vec<f64>,
    beta: Vec<f64>,
    /// `[k][j]` grids.
    v: Vec<Vec<f64>>,
    p0: Vec<Vec<f64>>,
    f: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    theta: f64,
    d: Vec<f64>,
    #[serde(default)]
    utility_mode: UtilityMode,
    #[serde(default)]
    seed: Option<u64>,
}

pub fn instance_to_json(instance: &Instance) -> Result<String> {
    let i = instance.clone();
    to_json(&InstanceFile {
        schema: INSTANCE_SCHEMA.into(),
        w: i.w,
        m: i.m,
        l: i.l,
        lambda: i.lambda,
        u0: i.u0,
        beta: i.beta,
        v: i.v,
        p0: i.p0,
        f: i.f,
        c: i.c,
        theta: i.theta,
        d: i.d,
        utility_mode: i.utility_mode,
        seed: i.seed,
    })
}

pub fn instance_from_json(text: &str) -> Result<Instance> {
    let f: InstanceFile = from_json(text, INSTANCE_SCHEMA)?;
    if f.w == 0 || f.w > crate::model::MAX_SUBSYSTEMS {
        return Err(Error::InvalidInstance(format!("subsystem count {} out of range", f.w)));
    }
    let inst = Instance {
        m: f.m,
        w: f.w,
        n: (1 << f.w) - 1,
        l: f.l,
        lambda: f.lambda,
        v: f.v,
        u0: f.u0,
        beta: f.beta,
        p0: f.p0,
        f: f.f,
        c: f.c,
        theta: f.theta,
        d: f.d,
        utility_mode: f.utility_mode,
        seed: f.seed,
    };
    inst.validate()?;
    Ok(inst)
}

pub fn write_instance(path: &Path, instance: &Instance) -> Result<()> {
    fs::write(path, instance_to_json(instance)?)?;
    Ok(())
}

pub fn read_instance(path: &Path) -> Result<Instance> {
    instance_from_json(&fs::read_to_string(path)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    schema: String,
    scenario: ScenarioSpec,
}

pub fn scenario_to_json(spec: &ScenarioSpec) -> Result<String> {
    to_json(&ScenarioFile {
        schema: SCENARIO_SCHEMA.into(),
        scenario: spec.clone(),
    })
}

pub fn scenario_from_json(text: &str) -> Result<ScenarioSpec> {
    let f: ScenarioFile = from_json(text, SCENARIO_SCHEMA)?;
    f.scenario.validate()?;
    Ok(f.scenario)
}

pub fn read_scenario(path: &Path) -> Result<ScenarioSpec> {
    scenario_from_json(&fs::read_to_string(path)?)
}

/// On-disk form of a solved decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionFile {
    pub schema: String,
    pub method: Method,
    pub certificate: Certificate,
    pub profit: f64,
    /// `[i][j]`: contract `i` recommended to group `j`.
    pub x: Vec<Vec<bool>>,
    pub y: Vec<bool>,
    /// `[i][h]`: contract `i` sold at level `h`.
    pub z: Vec<Vec<bool>>,
    /// `[i][j]` selling prices.
    pub prices: Vec<Vec<f64>>,
    pub nodes: u64,
    pub elapsed_seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub its_trace: Option<ItsTrace>,
}

impl SolutionFile {
    pub fn new(solution: &Solution, instance: &Instance, catalog: &Catalog) -> Result<Self> {
        let prices = PriceTable::compute(instance, catalog, &solution.decision)?;
        Ok(SolutionFile {
            schema: SOLUTION_SCHEMA.into(),
            method: solution.method,
            certificate: solution.certificate,
            profit: solution.profit,
            x: solution.decision.x.clone(),
            y: solution.decision.y.clone(),
            z: solution.decision.z.clone(),
            prices: prices.p,
            nodes: solution.nodes,
            elapsed_seconds: solution.elapsed.as_secs_f64(),
            its_trace: solution.its_trace.clone(),
        })
    }

    pub fn decision(&self) -> Decision {
        Decision {
            x: self.x.clone(),
            y: self.y.clone(),
            z: self.z.clone(),
        }
    }
}

pub fn write_solution(path: &Path, solution: &Solution, instance: &Instance, catalog: &Catalog) -> Result<()> {
    write_json(path, &SolutionFile::new(solution, instance, catalog)?)
}

pub fn read_solution(path: &Path) -> Result<SolutionFile> {
    from_json(&fs::read_to_string(path)?, SOLUTION_SCHEMA)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{default_table3_scenario, generate_instance};
    use crate::solution::Budget;

    #[test]
    fn number_format_pads_and_round_trips() {
        assert_eq!(format_number(0.2), "2.00000000000000e-1");
        assert_eq!(format_number(-1500.0), "-1.50000000000000e3");
        assert_eq!(format_number(0.0), "0.00000000000000e0");
        for x in [
            0.1 + 0.2,
            1.0 / 3.0,
            6.02214076e23,
            -2.5e-300,
            f64::MAX,
            f64::MIN_POSITIVE,
        ] {
            let s = format_number(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let digits = s
                .split('e')
                .next()
                .unwrap()
                .chars()
                .filter(|c| c.is_ascii_digit())
                .count();
            assert!(digits >= 15, "{s}");
        }
    }

    #[test]
    fn instance_round_trip_is_exact() {
        let inst = generate_instance(&default_table3_scenario(3, 6.0, 8.0, 4).unwrap()).unwrap();
        let text = instance_to_json(&inst).unwrap();
        assert!(text.contains("\"schema\": \"jdpew-instance/1\""));
        let back = instance_from_json(&text).unwrap();
        assert_eq!(back, inst);
        assert_eq!(instance_to_json(&back).unwrap(), text);
    }

    #[test]
    fn wrong_schema_and_unknown_fields_are_rejected() {
        let inst = generate_instance(&default_table3_scenario(2, 6.0, 8.0, 4).unwrap()).unwrap();
        let text = instance_to_json(&inst).unwrap();
        let err = instance_from_json(&text.replace("jdpew-instance/1", "jdpew-instance/9")).unwrap_err();
        assert_eq!(err.kind(), "schema");
        let err = instance_from_json(&text.replacen("{", "{\n  \"extra\": 1,", 1)).unwrap_err();
        assert_eq!(err.kind(), "json");
    }

    #[test]
    fn scenario_round_trip() {
        let spec = default_table3_scenario(4, 8.0, 2.0, 17).unwrap();
        let text = scenario_to_json(&spec).unwrap();
        assert_eq!(scenario_from_json(&text).unwrap(), spec);
    }

    #[test]
    fn solution_file_round_trip() {
        let inst = generate_instance(&default_table3_scenario(2, 6.0, 8.0, 4).unwrap()).unwrap();
        let cat = Catalog::new(2).unwrap();
        let sol = crate::its::its_solve(&inst, &cat, crate::its::ItsCaps::default()).unwrap();
        let file = SolutionFile::new(&sol, &inst, &cat).unwrap();
        let text = to_json(&file).unwrap();
        let back: SolutionFile = from_json(&text, SOLUTION_SCHEMA).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.decision(), sol.decision);
        assert!(back.its_trace.is_some());
        let exact = crate::exact::solve_exact(&inst, &cat, Budget::default()).unwrap();
        let text = to_json(&SolutionFile::new(&exact, &inst, &cat).unwrap()).unwrap();
        assert!(!text.contains("its_trace"));
    }
}
