use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Catalog, Decision, Instance};

/// Recommendation, advertising and discount grids of one decision.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionGrid {
    /// Long format: one line per cell of each grid.
    pub csv: String,
    /// Aligned text; cells of non-advertised contracts print as `-`.
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Cell {
    grid: String,
    contract: usize,
    label: String,
    index: usize,
    selected: u8,
    priced: u8,
}

pub fn render_solution_grid(decision: &Decision, instance: &Instance, catalog: &Catalog) -> Result<SolutionGrid> {
    let (n, m, l) = (catalog.n(), instance.m, instance.l);
    let shape_ok = decision.x.len() == n
        && decision.y.len() == n
        && decision.z.len() == n
        && decision.x.iter().all(|r| r.len() == m)
        && decision.z.iter().all(|r| r.len() == l);
    if !shape_ok {
        return Err(Error::Format("decision shape does not match the instance".into()));
    }
    let bit = |b: bool| b as u8;

    let mut cells = Vec::new();
    for (grid, width) in [("x", m), ("y", 1), ("z", l)] {
        for i in 0..n {
            for index in 0..width {
                let selected = match grid {
                    "x" => decision.x[i][index],
                    "y" => decision.y[i],
                    _ => decision.z[i][index],
                };
                cells.push(Cell {
                    grid: grid.into(),
                    contract: i,
                    label: catalog.label(i),
                    index,
                    selected: bit(selected),
                    priced: bit(decision.y[i]),
                });
            }
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for c in &cells {
        w.serialize(c).map_err(|e| Error::Format(e.to_string()))?;
    }
    let csv = String::from_utf8(w.into_inner().map_err(|e| Error::Format(e.to_string()))?).expect("UTF-8");

    let labels: Vec<String> = (0..n).map(|i| catalog.label(i)).collect();
    let lw = labels.iter().map(String::len).max().unwrap_or(0).max("contract".len());
    let mark = |b: bool| if b { "x" } else { "." };
    let mut text = String::new();

    let head: Vec<String> = (1..=m).map(|j| format!("g{j}")).collect();
    let cw = head.iter().map(String::len).max().unwrap_or(1);
    text.push_str("recommended (contract x group)\n");
    text.push_str(&format!(
        "{:<lw$}  {}\n",
        "contract",
        head.iter().map(|h| format!("{h:>cw$}")).collect::<Vec<_>>().join(" ")
    ));
    for i in 0..n {
        let row: Vec<String> = (0..m).map(|j| format!("{:>cw$}", mark(decision.x[i][j]))).collect();
        text.push_str(&format!("{:<lw$}  {}\n", labels[i], row.join(" ")));
    }

    text.push_str("\nadvertised\n");
    for i in 0..n {
        text.push_str(&format!("{:<lw$}  {}\n", labels[i], mark(decision.y[i])));
    }

    let head: Vec<String> = instance.d.iter().map(|d| format!("{d:.4}")).collect();
    let cw = head.iter().map(String::len).max().unwrap_or(1);
    text.push_str("\ndiscount (contract x multiplier)\n");
    text.push_str(&format!(
        "{:<lw$}  {}\n",
        "contract",
        head.iter().map(|h| format!("{h:>cw$}")).collect::<Vec<_>>().join(" ")
    ));
    for i in 0..n {
        let row: Vec<String> = (0..l)
            .map(|h| {
                let c = if decision.y[i] { mark(decision.z[i][h]) } else { "-" };
                format!("{c:>cw$}")
            })
            .collect();
        let tail = if decision.y[i] { "" } else { "  not priced" };
        text.push_str(&format!("{:<lw$}  {}{tail}\n", labels[i], row.join(" ")));
    }
    Ok(SolutionGrid { csv, text })
}

/// Rebuild the decision from the long-format grid CSV.
pub fn parse_solution_grid(csv_text: &str) -> Result<Decision> {
    let cells: Vec<Cell> = csv::Reader::from_reader(csv_text.as_bytes())
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Format(e.to_string()))?;
    let dim = |g: &str| {
        let of = cells.iter().filter(|c| c.grid == g);
        let n = of.clone().map(|c| c.contract + 1).max().unwrap_or(0);
        let k = of.map(|c| c.index + 1).max().unwrap_or(0);
        (n, k)
    };
    let ((n, m), (_, l)) = (dim("x"), dim("z"));
    let mut d = Decision {
        x: vec![vec![false; m]; n],
        y: vec![false; n],
        z: vec![vec![false; l]; n],
    };
    for c in &cells {
        let on = match c.selected {
            0 => false,
            1 => true,
            v => return Err(Error::Format(format!("cell value {v} is not 0 or 1"))),
        };
        let slot = match c.grid.as_str() {
            "x" => d.x.get_mut(c.contract).and_then(|r| r.get_mut(c.index)),
            "y" if c.index == 0 => d.y.get_mut(c.contract),
            "z" => d.z.get_mut(c.contract).and_then(|r| r.get_mut(c.index)),
            _ => None,
        };
        *slot.ok_or_else(|| Error::Format(format!("bad grid cell {c:?}")))? = on;
    }
    Ok(d)
}
