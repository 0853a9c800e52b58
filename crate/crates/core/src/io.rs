//! Output writers: legacy VTK fields on triangulations, rate tables as CSV,
//! JSON for tents and diagnostics. All writers are deterministic: the same
//! input gives byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::dg::DgSpace;
use crate::driver::RateRow;
use crate::error::{Error, Result};
use crate::mesh::SpatialMesh;
use crate::mixedfem::{MixedSpace, WaveState};

#[derive(Clone, Debug, PartialEq)]
pub enum FieldValues {
    Scalar(Vec<f64>),
    Vector(Vec<[f64; 2]>),
}

impl FieldValues {
    pub fn len(&self) -> usize {
        match self {
            FieldValues::Scalar(v) => v.len(),
            FieldValues::Vector(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub name: String,
    pub values: FieldValues,
}

/// Fields sampled on a mesh at one time: vertex values (P1 down-sample)
/// and per-element values (cell means, viscosity).
#[derive(Clone, Debug)]
pub struct FieldSnapshot<'a> {
    pub time: f64,
    pub mesh: &'a SpatialMesh,
    pub point_data: Vec<Field>,
    pub cell_data: Vec<Field>,
}

fn check_name(name: &str) -> Result<()> {
    if name.is_empty() || name.chars().any(char::is_whitespace) {
        return Err(Error::Field(format!("field name '{name}' must be non-empty without whitespace")));
    }
    Ok(())
}

impl<'a> FieldSnapshot<'a> {
    pub fn new(time: f64, mesh: &'a SpatialMesh) -> Result<Self> {
        if !(time >= 0.0 && time.is_finite()) {
            return Err(Error::Field(format!("snapshot time must be finite and nonnegative, got {time}")));
        }
        Ok(Self {
            time,
            mesh,
            point_data: Vec::new(),
            cell_data: Vec::new(),
        })
    }

    pub fn with_point(mut self, name: &str, values: FieldValues) -> Result<Self> {
        check_name(name)?;
        if values.len() != self.mesh.num_vertices() {
            return Err(Error::Field(format!(
                "point field '{name}' has {} values for {} vertices",
                values.len(),
                self.mesh.num_vertices()
            )));
        }
        self.point_data.push(Field { name: name.into(), values });
        Ok(self)
    }

    pub fn with_cell(mut self, name: &str, values: FieldValues) -> Result<Self> {
        check_name(name)?;
        if values.len() != self.mesh.num_elements() {
            return Err(Error::Field(format!(
                "cell field '{name}' has {} values for {} elements",
                values.len(),
                self.mesh.num_elements()
            )));
        }
        self.cell_data.push(Field { name: name.into(), values });
        Ok(self)
    }
}

const CORNERS: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Vertex values of a DG field: the average of the element traces meeting
/// at each vertex.
pub fn vertex_average<const L: usize>(space: &DgSpace, state: &[[f64; L]]) -> Vec<[f64; L]> {
    let mesh = &space.mesh;
    let mut sum = vec![[0.0; L]; mesh.num_vertices()];
    let mut count = vec![0usize; mesh.num_vertices()];
    for e in 0..mesh.num_elements() {
        for (j, &v) in mesh.element(e).iter().enumerate() {
            let u = space.eval(state, e, CORNERS[j]);
            for l in 0..L {
                sum[v][l] += u[l];
            }
            count[v] += 1;
        }
    }
    for (s, &c) in sum.iter_mut().zip(&count) {
        for x in s.iter_mut() {
            *x /= c.max(1) as f64;
        }
    }
    sum
}

/// Snapshot of a flat-front DG state with one named scalar per component:
/// vertex averages as point data, exact cell means as cell data.
pub fn dg_snapshot<'a, const L: usize>(space: &'a DgSpace, state: &[[f64; L]], names: [&str; L], time: f64) -> Result<FieldSnapshot<'a>> {
    let verts = vertex_average(space, state);
    let means: Vec<[f64; L]> = (0..space.mesh.num_elements()).map(|e| space.cell_mean(state, e)).collect();
    let mut snap = FieldSnapshot::new(time, &space.mesh)?;
    for (l, name) in names.iter().enumerate() {
        snap = snap
            .with_point(name, FieldValues::Scalar(verts.iter().map(|u| u[l]).collect()))?
            .with_cell(name, FieldValues::Scalar(means.iter().map(|u| u[l]).collect()))?;
    }
    Ok(snap)
}

/// Snapshot of a wave state: `mu` and the flux `q` at the vertices
/// (averaged over elements) and their cell means.
pub fn wave_snapshot<'a>(space: &'a MixedSpace, state: &WaveState, time: f64) -> Result<FieldSnapshot<'a>> {
    let mesh = &space.scalar.mesh;
    let mut mu = vec![0.0; mesh.num_vertices()];
    let mut q = vec![[0.0; 2]; mesh.num_vertices()];
    let mut count = vec![0usize; mesh.num_vertices()];
    let mut mu_mean = Vec::with_capacity(mesh.num_elements());
    let mut q_mean = Vec::with_capacity(mesh.num_elements());
    let sp = &space.scalar;
    for e in 0..mesh.num_elements() {
        let pts = mesh.element_points(e);
        for (j, &v) in mesh.element(e).iter().enumerate() {
            mu[v] += space.eval_scalar(state, e, CORNERS[j]);
            let f = space.eval_flux(state, e, pts[j]);
            q[v][0] += f[0];
            q[v][1] += f[1];
            count[v] += 1;
        }
        let (mut m, mut f) = (0.0, [0.0; 2]);
        for (&b, &w) in sp.volume_bary().iter().zip(sp.volume_weights()) {
            m += w * space.eval_scalar(state, e, b);
            let fv = space.eval_flux(state, e, sp.point(e, b));
            f[0] += w * fv[0];
            f[1] += w * fv[1];
        }
        // reference weights sum to the reference area 1/2
        let wsum: f64 = sp.volume_weights().iter().sum();
        mu_mean.push(m / wsum);
        q_mean.push([f[0] / wsum, f[1] / wsum]);
    }
    for v in 0..mesh.num_vertices() {
        let c = count[v].max(1) as f64;
        mu[v] /= c;
        q[v] = [q[v][0] / c, q[v][1] / c];
    }
    FieldSnapshot::new(time, mesh)?
        .with_point("mu", FieldValues::Scalar(mu))?
        .with_point("q", FieldValues::Vector(q))?
        .with_cell("mu", FieldValues::Scalar(mu_mean))?
        .with_cell("q", FieldValues::Vector(q_mean))
}

fn write_fields(s: &mut String, fields: &[Field]) {
    for f in fields {
        match &f.values {
            FieldValues::Scalar(v) => {
                writeln!(s, "SCALARS {} double 1\nLOOKUP_TABLE default", f.name).unwrap();
                for x in v {
                    writeln!(s, "{x:e}").unwrap();
                }
            }
            FieldValues::Vector(v) => {
                writeln!(s, "VECTORS {} double", f.name).unwrap();
                for x in v {
                    writeln!(s, "{:e} {:e} 0", x[0], x[1]).unwrap();
                }
            }
        }
    }
}

/// Legacy ASCII VTK text of a snapshot (`DATASET UNSTRUCTURED_GRID`).
pub fn vtk_string(snap: &FieldSnapshot<'_>) -> String {
    let mesh = snap.mesh;
    let mut s = String::new();
    writeln!(s, "# vtk DataFile Version 3.0").unwrap();
    writeln!(s, "tentkit t={:e}", snap.time).unwrap();
    writeln!(s, "ASCII\nDATASET UNSTRUCTURED_GRID").unwrap();
    writeln!(s, "POINTS {} double", mesh.num_vertices()).unwrap();
    for p in mesh.vertices() {
        writeln!(s, "{:e} {:e} 0", p[0], p[1]).unwrap();
    }
    let ne = mesh.num_elements();
    writeln!(s, "CELLS {ne} {}", 4 * ne).unwrap();
    for el in mesh.elements() {
        writeln!(s, "3 {} {} {}", el[0], el[1], el[2]).unwrap();
    }
    writeln!(s, "CELL_TYPES {ne}").unwrap();
    for _ in 0..ne {
        writeln!(s, "5").unwrap();
    }
    if !snap.point_data.is_empty() {
        writeln!(s, "POINT_DATA {}", mesh.num_vertices()).unwrap();
        write_fields(&mut s, &snap.point_data);
    }
    if !snap.cell_data.is_empty() {
        writeln!(s, "CELL_DATA {ne}").unwrap();
        write_fields(&mut s, &snap.cell_data);
    }
    s
}

pub fn write_vtk(snap: &FieldSnapshot<'_>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, vtk_string(snap))?;
    Ok(())
}

/// Contents of a legacy VTK file written by [`write_vtk`].
#[derive(Clone, Debug, PartialEq)]
pub struct VtkData {
    pub time: Option<f64>,
    pub points: Vec<[f64; 3]>,
    pub cells: Vec<Vec<usize>>,
    pub cell_types: Vec<u8>,
    pub point_data: Vec<Field>,
    pub cell_data: Vec<Field>,
}

struct Tokens<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    last: usize,
}

impl<'a> Tokens<'a> {
    fn line(&mut self) -> Result<(usize, Vec<&'a str>)> {
        loop {
            let (i, l) = self.lines.next().ok_or_else(|| Error::Parse {
                line: self.last + 1,
                msg: "unexpected end of file".into(),
            })?;
            self.last = i + 1;
            let toks: Vec<&str> = l.split_whitespace().collect();
            if !toks.is_empty() {
                return Ok((i + 1, toks));
            }
        }
    }

    fn at_end(&mut self) -> bool {
        while let Some((_, l)) = self.lines.peek() {
            if l.trim().is_empty() {
                self.lines.next();
            } else {
                return false;
            }
        }
        true
    }

    fn numbers<T: std::str::FromStr>(&mut self, count: usize) -> Result<Vec<T>> {
        let (ln, toks) = self.line()?;
        if toks.len() != count {
            return Err(Error::Parse {
                line: ln,
                msg: format!("expected {count} values, found {}", toks.len()),
            });
        }
        toks.iter()
            .map(|t| {
                t.parse().map_err(|_| Error::Parse {
                    line: ln,
                    msg: format!("bad number '{t}'"),
                })
            })
            .collect()
    }
}

fn parse_count(ln: usize, tok: Option<&str>) -> Result<usize> {
    tok.and_then(|t| t.parse().ok()).ok_or_else(|| Error::Parse {
        line: ln,
        msg: "missing or bad count".into(),
    })
}

fn parse_fields(tk: &mut Tokens<'_>, n: usize, out: &mut Vec<Field>) -> Result<Option<(usize, Vec<String>)>> {
    while !tk.at_end() {
        let (ln, toks) = tk.line()?;
        match toks[0] {
            "SCALARS" => {
                let name = toks.get(1).ok_or(Error::Parse { line: ln, msg: "missing name".into() })?.to_string();
                let (_, lt) = tk.line()?;
                if lt[0] != "LOOKUP_TABLE" {
                    return Err(Error::Parse { line: ln + 1, msg: "expected LOOKUP_TABLE".into() });
                }
                let v = (0..n).map(|_| tk.numbers::<f64>(1).map(|x| x[0])).collect::<Result<_>>()?;
                out.push(Field { name, values: FieldValues::Scalar(v) });
            }
            "VECTORS" => {
                let name = toks.get(1).ok_or(Error::Parse { line: ln, msg: "missing name".into() })?.to_string();
                let v = (0..n).map(|_| tk.numbers::<f64>(3).map(|x| [x[0], x[1]])).collect::<Result<_>>()?;
                out.push(Field { name, values: FieldValues::Vector(v) });
            }
            _ => return Ok(Some((ln, toks.iter().map(|s| s.to_string()).collect()))),
        }
    }
    Ok(None)
}

/// Parses the subset of legacy ASCII VTK produced by [`write_vtk`].
pub fn parse_vtk(text: &str) -> Result<VtkData> {
    let mut tk = Tokens {
        lines: text.lines().enumerate().peekable(),
        last: 0,
    };
    let bad = |line: usize, msg: &str| Error::Parse { line, msg: msg.into() };
    let (ln, head) = tk.line()?;
    if head.first() != Some(&"#") || !head.contains(&"vtk") {
        return Err(bad(ln, "missing '# vtk DataFile' header"));
    }
    let (_, title) = tk.line()?;
    let time = title.iter().find_map(|t| t.strip_prefix("t=")).and_then(|t| t.parse().ok());
    let (ln, fmt) = tk.line()?;
    if fmt != ["ASCII"] {
        return Err(bad(ln, "only ASCII files are supported"));
    }
    let (ln, ds) = tk.line()?;
    if ds != ["DATASET", "UNSTRUCTURED_GRID"] {
        return Err(bad(ln, "expected DATASET UNSTRUCTURED_GRID"));
    }
    let (ln, pts) = tk.line()?;
    if pts[0] != "POINTS" {
        return Err(bad(ln, "expected POINTS"));
    }
    let np = parse_count(ln, pts.get(1).copied())?;
    let points = (0..np)
        .map(|_| tk.numbers::<f64>(3).map(|x| [x[0], x[1], x[2]]))
        .collect::<Result<Vec<_>>>()?;
    let (ln, cl) = tk.line()?;
    if cl[0] != "CELLS" {
        return Err(bad(ln, "expected CELLS"));
    }
    let nc = parse_count(ln, cl.get(1).copied())?;
    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (ln, toks) = tk.line()?;
        let ids: Vec<usize> = toks.iter().map(|t| t.parse()).collect::<Result<_, _>>().map_err(|_| bad(ln, "bad cell index"))?;
        if ids.is_empty() || ids[0] + 1 != ids.len() || ids[1..].iter().any(|&i| i >= np) {
            return Err(bad(ln, "malformed cell"));
        }
        cells.push(ids[1..].to_vec());
    }
    let (ln, ct) = tk.line()?;
    if ct[0] != "CELL_TYPES" || parse_count(ln, ct.get(1).copied())? != nc {
        return Err(bad(ln, "expected CELL_TYPES matching CELLS"));
    }
    let cell_types = (0..nc).map(|_| tk.numbers::<u8>(1).map(|x| x[0])).collect::<Result<_>>()?;
    let mut data = VtkData {
        time,
        points,
        cells,
        cell_types,
        point_data: Vec::new(),
        cell_data: Vec::new(),
    };
    let mut next = if tk.at_end() { None } else { Some(tk.line().map(|(l, t)| (l, t.iter().map(|s| s.to_string()).collect::<Vec<_>>()))?) };
    while let Some((ln, toks)) = next {
        let n = parse_count(ln, toks.get(1).map(String::as_str))?;
        next = match toks[0].as_str() {
            "POINT_DATA" if n == np => parse_fields(&mut tk, n, &mut data.point_data)?,
            "CELL_DATA" if n == nc => parse_fields(&mut tk, n, &mut data.cell_data)?,
            _ => return Err(bad(ln, "expected POINT_DATA or CELL_DATA with matching count")),
        };
    }
    Ok(data)
}

pub fn read_vtk(path: impl AsRef<Path>) -> Result<VtkData> {
    parse_vtk(&fs::read_to_string(path)?)
}

/// Rate table as CSV with header `p,h,e,slope`; floats carry 17
/// significant digits so they parse back bit-exactly.
pub fn rates_csv(rows: &[RateRow]) -> String {
    let mut s = String::from("p,h,e,slope\n");
    for r in rows {
        writeln!(s, "{},{:.16e},{:.16e},{:.16e}", r.p, r.h, r.e, r.slope).unwrap();
    }
    s
}

pub fn write_rates_csv(rows: &[RateRow], path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, rates_csv(rows))?;
    Ok(())
}

pub fn parse_rates_csv(text: &str) -> Result<Vec<RateRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "p,h,e,slope")) => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: "expected header 'p,h,e,slope'".into(),
            })
        }
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let bad = |msg: &str| Error::Parse { line: i + 1, msg: msg.into() };
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 4 {
                return Err(bad("expected 4 columns"));
            }
            let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad("bad number"));
            Ok(RateRow {
                p: f[0].trim().parse().map_err(|_| bad("bad degree"))?,
                h: num(f[1])?,
                e: num(f[2])?,
                slope: num(f[3])?,
            })
        })
        .collect()
}

/// Pretty JSON of any serializable value (tent slabs, diagnostics).
pub fn write_json<T: Serialize + ?Sized>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
