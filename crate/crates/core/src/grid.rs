//! Feeder topology, device attachments, and time-series data.
//!
//! A network is a radial (tree-shaped) low-voltage feeder fed from a single
//! slack bus. Loads withdraw power, PV generators inject it; every quantity
//! in [`TimeSeriesSet`] is stored in SI units (W / var) and converted to
//! per-unit at the simulation boundary.
//!
//! File formats:
//!
//! * Network file — sectioned text. Scalar keys (`slack`, `transformer_va`,
//!   `base_v`, `vmin`, `vmax`) are `key = value` lines; `[buses]`, `[lines]`,
//!   `[loads]` and `[pvs]` sections hold one comma-separated record per line.
//!   `#` starts a comment.
//! * Profile CSV — header `t, load_p:<id>..., load_q:<id>..., pv_p:<id>...`,
//!   one row per 15-minute step.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Bus identifier (a name, unique within one network).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BusId(pub String);

/// Load identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LoadId(pub String);

/// PV generator identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GenId(pub String);

impl std::fmt::Display for BusId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}
impl std::fmt::Display for LoadId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}
impl std::fmt::Display for GenId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// One feeder span between two buses.
#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub from: BusId,
    pub to: BusId,
    pub resistance_ohm: f64,
    pub reactance_ohm: f64,
}

/// A load attached to a bus. At most one load per bus.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadAttachment {
    pub bus: BusId,
    pub id: LoadId,
}

/// A PV generator (with its smart inverter) attached to a bus.
#[derive(Debug, Clone, PartialEq)]
pub struct PvAttachment {
    pub bus: BusId,
    pub id: GenId,
}

/// Nameplate data of one smart inverter.
#[derive(Debug, Clone, PartialEq)]
pub struct InverterSpec {
    pub gen_id: GenId,
    /// Rated apparent power S in VA. Active and reactive output are jointly
    /// constrained by `p^2 + q^2 <= s_rated^2`.
    pub s_rated_va: f64,
}

impl InverterSpec {
    pub fn new(gen_id: GenId, s_rated_va: f64) -> Result<Self> {
        if !(s_rated_va > 0.0) {
            return Err(Error::Value(format!(
                "inverter {gen_id}: s_rated must be > 0, got {s_rated_va}"
            )));
        }
        Ok(Self { gen_id, s_rated_va })
    }
}

/// Static description of a radial feeder.
///
/// Load and PV attachment lists are kept in file order; that order defines
/// the row order of the matrices in [`TimeSeriesSet`] and the action vector
/// layout everywhere else.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub buses: Vec<BusId>,
    pub lines: Vec<Line>,
    pub slack_bus: BusId,
    pub transformer_rating_va: f64,
    pub base_voltage_v: f64,
    pub base_power_va: f64,
    pub loads: Vec<LoadAttachment>,
    pub pvs: Vec<PvAttachment>,
    pub v_min_pu: f64,
    pub v_max_pu: f64,
}

impl NetworkSpec {
    /// Validates every structural invariant: radial connected graph, positive
    /// bases, sane voltage band, unique single-bus attachments.
    pub fn validate(&self) -> Result<()> {
        if self.buses.is_empty() {
            return Err(Error::Topology("network has no buses".into()));
        }
        let mut seen = HashSet::new();
        for b in &self.buses {
            if !seen.insert(b) {
                return Err(Error::Topology(format!("duplicate bus id {b}")));
            }
        }
        let index = self.bus_index();
        if !index.contains_key(&self.slack_bus) {
            return Err(Error::Topology(format!(
                "slack bus {} is not in the bus list",
                self.slack_bus
            )));
        }
        if self.lines.len() != self.buses.len() - 1 {
            return Err(Error::Topology(format!(
                "radial feeder needs |lines| = |buses| - 1, got {} lines for {} buses",
                self.lines.len(),
                self.buses.len()
            )));
        }
        for l in &self.lines {
            if !index.contains_key(&l.from) || !index.contains_key(&l.to) {
                return Err(Error::Topology(format!(
                    "line {} -> {} references an unknown bus",
                    l.from, l.to
                )));
            }
            if l.resistance_ohm < 0.0 || l.reactance_ohm < 0.0 {
                return Err(Error::Value(format!(
                    "line {} -> {} has negative impedance",
                    l.from, l.to
                )));
            }
        }
        // |lines| = |buses| - 1 plus full reachability from the slack rules
        // out both cycles and disconnected islands.
        let reached = self.reachable_from_slack(&index);
        if reached.len() != self.buses.len() {
            return Err(Error::Topology(format!(
                "graph is not connected: {} of {} buses reachable from slack",
                reached.len(),
                self.buses.len()
            )));
        }
        if !(self.base_power_va > 0.0) {
            return Err(Error::Value(format!(
                "base_power must be > 0, got {}",
                self.base_power_va
            )));
        }
        if !(self.base_voltage_v > 0.0) {
            return Err(Error::Value(format!(
                "base_voltage must be > 0, got {}",
                self.base_voltage_v
            )));
        }
        if !(0.0 < self.v_min_pu && self.v_min_pu < 1.0 && 1.0 < self.v_max_pu) {
            return Err(Error::Value(format!(
                "voltage band must satisfy 0 < vmin < 1 < vmax, got [{}, {}]",
                self.v_min_pu, self.v_max_pu
            )));
        }
        let mut load_buses = HashSet::new();
        let mut load_ids = HashSet::new();
        for a in &self.loads {
            if !index.contains_key(&a.bus) {
                return Err(Error::Topology(format!(
                    "load {} attaches to unknown bus {}",
                    a.id, a.bus
                )));
            }
            if !load_buses.insert(&a.bus) {
                return Err(Error::Topology(format!(
                    "bus {} has more than one load",
                    a.bus
                )));
            }
            if !load_ids.insert(&a.id) {
                return Err(Error::Topology(format!("duplicate load id {}", a.id)));
            }
        }
        let mut pv_buses = HashSet::new();
        let mut pv_ids = HashSet::new();
        for a in &self.pvs {
            if !index.contains_key(&a.bus) {
                return Err(Error::Topology(format!(
                    "pv {} attaches to unknown bus {}",
                    a.id, a.bus
                )));
            }
            if !pv_buses.insert(&a.bus) {
                return Err(Error::Topology(format!("bus {} has more than one pv", a.bus)));
            }
            if !pv_ids.insert(&a.id) {
                return Err(Error::Topology(format!("duplicate pv id {}", a.id)));
            }
        }
        Ok(())
    }

    /// Map from bus id to its position in `buses`.
    pub fn bus_index(&self) -> HashMap<&BusId, usize> {
        self.buses.iter().enumerate().map(|(i, b)| (b, i)).collect()
    }

    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn n_loads(&self) -> usize {
        self.loads.len()
    }

    pub fn n_pvs(&self) -> usize {
        self.pvs.len()
    }

    /// Impedance base in ohm, `base_voltage^2 / base_power`.
    pub fn z_base_ohm(&self) -> f64 {
        self.base_voltage_v * self.base_voltage_v / self.base_power_va
    }

    fn reachable_from_slack(&self, index: &HashMap<&BusId, usize>) -> HashSet<usize> {
        let n = self.buses.len();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for l in &self.lines {
            let (Some(&a), Some(&b)) = (index.get(&l.from), index.get(&l.to)) else {
                continue;
            };
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut reached = HashSet::new();
        let mut stack = vec![index[&self.slack_bus]];
        while let Some(i) = stack.pop() {
            if reached.insert(i) {
                stack.extend(adj[i].iter().copied());
            }
        }
        reached
    }
}

/// Per-device power profiles over the studied horizon.
///
/// Row `i` of `load_p` / `load_q` belongs to `spec.loads[i]`; row `i` of
/// `pv_p_avail` belongs to `spec.pvs[i]`. Loads are positive-withdraw, PV
/// availability is positive-inject.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesSet {
    pub n_steps: usize,
    pub step_minutes: u32,
    pub load_p_w: Vec<Vec<f64>>,
    pub load_q_var: Vec<Vec<f64>>,
    pub pv_p_avail_w: Vec<Vec<f64>>,
}

impl TimeSeriesSet {
    pub fn validate(&self) -> Result<()> {
        for (name, m, allow) in [
            ("load_p", &self.load_p_w, false),
            ("load_q", &self.load_q_var, true),
            ("pv_p_avail", &self.pv_p_avail_w, false),
        ] {
            for (i, row) in m.iter().enumerate() {
                if row.len() != self.n_steps {
                    return Err(Error::Shape(format!(
                        "{name} row {i} has {} steps, expected {}",
                        row.len(),
                        self.n_steps
                    )));
                }
                for (t, &v) in row.iter().enumerate() {
                    if !v.is_finite() {
                        return Err(Error::Numerical(format!(
                            "{name}[{i}][{t}] is not finite"
                        )));
                    }
                    if !allow && v < 0.0 {
                        return Err(Error::Value(format!(
                            "{name}[{i}][{t}] = {v} violates the sign convention"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Duration of one step in hours.
    pub fn step_hours(&self) -> f64 {
        f64::from(self.step_minutes) / 60.0
    }
}

// ---------------------------------------------------------------------------
// Network file format
// ---------------------------------------------------------------------------

/// Parses a network file and validates the result.
pub fn load_network(path: &Path) -> Result<(NetworkSpec, Vec<InverterSpec>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_network(&text)
}

/// Parses the sectioned network text format.
pub fn parse_network(text: &str) -> Result<(NetworkSpec, Vec<InverterSpec>)> {
    let mut scalars: HashMap<String, String> = HashMap::new();
    let mut buses = Vec::new();
    let mut lines = Vec::new();
    let mut loads = Vec::new();
    let mut pvs = Vec::new();
    let mut inverters = Vec::new();

    let mut section = String::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = name.trim().to_lowercase();
            continue;
        }
        let at = |msg: String| Error::Parse(format!("line {}: {msg}", lineno + 1));
        match section.as_str() {
            "" => {
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| at(format!("expected `key = value`, got `{line}`")))?;
                scalars.insert(k.trim().to_lowercase(), v.trim().to_string());
            }
            "buses" => buses.push(BusId(line.to_string())),
            "lines" => {
                let f = fields(line);
                if f.len() != 4 {
                    return Err(at(format!("line record needs 4 fields, got {}", f.len())));
                }
                lines.push(Line {
                    from: BusId(f[0].to_string()),
                    to: BusId(f[1].to_string()),
                    resistance_ohm: parse_f64(f[2]).map_err(&at)?,
                    reactance_ohm: parse_f64(f[3]).map_err(&at)?,
                });
            }
            "loads" => {
                let f = fields(line);
                if f.len() != 2 {
                    return Err(at(format!("load record needs 2 fields, got {}", f.len())));
                }
                loads.push(LoadAttachment {
                    bus: BusId(f[0].to_string()),
                    id: LoadId(f[1].to_string()),
                });
            }
            "pvs" => {
                let f = fields(line);
                if f.len() != 3 {
                    return Err(at(format!("pv record needs 3 fields, got {}", f.len())));
                }
                let gen = GenId(f[1].to_string());
                pvs.push(PvAttachment {
                    bus: BusId(f[0].to_string()),
                    id: gen.clone(),
                });
                inverters.push(InverterSpec::new(gen, parse_f64(f[2]).map_err(&at)?)?);
            }
            other => return Err(at(format!("unknown section [{other}]"))),
        }
    }

    let scalar = |k: &str| -> Result<&String> {
        scalars
            .get(k)
            .ok_or_else(|| Error::Parse(format!("missing `{k} = ...`")))
    };
    let scalar_f64 = |k: &str| -> Result<f64> {
        parse_f64(scalar(k)?).map_err(|m| Error::Parse(format!("{k}: {m}")))
    };

    let transformer_rating_va = scalar_f64("transformer_va")?;
    let spec = NetworkSpec {
        buses,
        lines,
        slack_bus: BusId(scalar("slack")?.clone()),
        transformer_rating_va,
        base_voltage_v: scalar_f64("base_v")?,
        // The transformer rating doubles as the power base.
        base_power_va: transformer_rating_va,
        loads,
        pvs,
        v_min_pu: scalar_f64("vmin")?,
        v_max_pu: scalar_f64("vmax")?,
    };
    spec.validate()?;
    Ok((spec, inverters))
}

/// Renders a network (plus inverter ratings) back into the text format.
/// `parse_network(serialize_network(..))` reproduces the spec field by field.
pub fn serialize_network(spec: &NetworkSpec, inverters: &[InverterSpec]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "slack = {}", spec.slack_bus);
    let _ = writeln!(out, "transformer_va = {}", spec.transformer_rating_va);
    let _ = writeln!(out, "base_v = {}", spec.base_voltage_v);
    let _ = writeln!(out, "vmin = {}", spec.v_min_pu);
    let _ = writeln!(out, "vmax = {}", spec.v_max_pu);
    let _ = writeln!(out, "\n[buses]");
    for b in &spec.buses {
        let _ = writeln!(out, "{b}");
    }
    let _ = writeln!(out, "\n[lines]");
    for l in &spec.lines {
        let _ = writeln!(
            out,
            "{}, {}, {}, {}",
            l.from, l.to, l.resistance_ohm, l.reactance_ohm
        );
    }
    let _ = writeln!(out, "\n[loads]");
    for a in &spec.loads {
        let _ = writeln!(out, "{}, {}", a.bus, a.id);
    }
    let _ = writeln!(out, "\n[pvs]");
    let rating: HashMap<&GenId, f64> = inverters
        .iter()
        .map(|i| (&i.gen_id, i.s_rated_va))
        .collect();
    for a in &spec.pvs {
        let s = rating.get(&a.id).copied().unwrap_or(0.0);
        let _ = writeln!(out, "{}, {}, {}", a.bus, a.id, s);
    }
    out
}

pub fn save_network(path: &Path, spec: &NetworkSpec, inverters: &[InverterSpec]) -> Result<()> {
    std::fs::write(path, serialize_network(spec, inverters))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Profile CSV
// ---------------------------------------------------------------------------

/// Reads a profile CSV and aligns its columns to `spec`'s load/PV ordering.
pub fn load_timeseries(path: &Path, spec: &NetworkSpec) -> Result<TimeSeriesSet> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_timeseries(&text, spec)
}

pub fn parse_timeseries(text: &str, spec: &NetworkSpec) -> Result<TimeSeriesSet> {
    let mut rows = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = rows
        .next()
        .ok_or_else(|| Error::Parse("profile CSV is empty".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.first() != Some(&"t") {
        return Err(Error::Parse("first CSV column must be `t`".into()));
    }

    // Column lookup per device id; every device in the spec must be present.
    let mut col_of: HashMap<String, usize> = HashMap::new();
    for (i, c) in cols.iter().enumerate().skip(1) {
        if col_of.insert((*c).to_string(), i).is_some() {
            return Err(Error::Shape(format!("duplicate column `{c}`")));
        }
    }
    let find = |name: String| -> Result<usize> {
        col_of
            .get(&name)
            .copied()
            .ok_or_else(|| Error::Shape(format!("missing column `{name}`")))
    };
    let load_p_cols: Vec<usize> = spec
        .loads
        .iter()
        .map(|a| find(format!("load_p:{}", a.id)))
        .collect::<Result<_>>()?;
    let load_q_cols: Vec<usize> = spec
        .loads
        .iter()
        .map(|a| find(format!("load_q:{}", a.id)))
        .collect::<Result<_>>()?;
    let pv_cols: Vec<usize> = spec
        .pvs
        .iter()
        .map(|a| find(format!("pv_p:{}", a.id)))
        .collect::<Result<_>>()?;

    let mut load_p = vec![Vec::new(); spec.n_loads()];
    let mut load_q = vec![Vec::new(); spec.n_loads()];
    let mut pv_p = vec![Vec::new(); spec.n_pvs()];
    let mut n_steps = 0usize;
    for (lineno, row) in rows {
        let f: Vec<&str> = row.split(',').map(str::trim).collect();
        if f.len() != cols.len() {
            return Err(Error::Shape(format!(
                "row {} has {} fields, header has {}",
                lineno + 1,
                f.len(),
                cols.len()
            )));
        }
        let get = |c: usize| -> Result<f64> {
            parse_f64(f[c]).map_err(|m| Error::Parse(format!("row {}: {m}", lineno + 1)))
        };
        for (r, &c) in load_p_cols.iter().enumerate() {
            load_p[r].push(get(c)?);
        }
        for (r, &c) in load_q_cols.iter().enumerate() {
            load_q[r].push(get(c)?);
        }
        for (r, &c) in pv_cols.iter().enumerate() {
            pv_p[r].push(get(c)?);
        }
        n_steps += 1;
    }

    let set = TimeSeriesSet {
        n_steps,
        step_minutes: 15,
        load_p_w: load_p,
        load_q_var: load_q,
        pv_p_avail_w: pv_p,
    };
    set.validate()?;
    Ok(set)
}

/// Writes the profile CSV for `series`, columns ordered like `spec`.
pub fn save_timeseries(path: &Path, spec: &NetworkSpec, series: &TimeSeriesSet) -> Result<()> {
    let mut out = String::new();
    out.push('t');
    for a in &spec.loads {
        let _ = write!(out, ", load_p:{}", a.id);
    }
    for a in &spec.loads {
        let _ = write!(out, ", load_q:{}", a.id);
    }
    for a in &spec.pvs {
        let _ = write!(out, ", pv_p:{}", a.id);
    }
    out.push('\n');
    for t in 0..series.n_steps {
        let _ = write!(out, "{t}");
        for row in &series.load_p_w {
            let _ = write!(out, ", {}", row[t]);
        }
        for row in &series.load_q_var {
            let _ = write!(out, ", {}", row[t]);
        }
        for row in &series.pv_p_avail_w {
            let _ = write!(out, ", {}", row[t]);
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn fields(line: &str) -> Vec<&str> {
    line.split(',').map(str::trim).collect()
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    s.parse::<f64>().map_err(|_| format!("`{s}` is not a number"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_bus_text() -> &'static str {
        "slack = slack\n\
         transformer_va = 400000\n\
         base_v = 400\n\
         vmin = 0.95\n\
         vmax = 1.05\n\
         [buses]\n\
         slack\n\
         bus1\n\
         [lines]\n\
         slack, bus1, 0.0097, 0.0032\n\
         [loads]\n\
         bus1, load1\n\
         [pvs]\n\
         bus1, pv1, 5000\n"
    }

    #[test]
    fn parses_minimal_two_bus_network() {
        let (spec, inv) = parse_network(two_bus_text()).unwrap();
        assert_eq!(spec.n_buses(), 2);
        assert_eq!(spec.lines.len(), 1);
        assert_eq!(spec.n_loads(), 1);
        assert_eq!(spec.n_pvs(), 1);
        assert_eq!(spec.base_power_va, 400_000.0);
        assert_eq!(inv[0].s_rated_va, 5000.0);
    }

    #[test]
    fn loop_is_rejected() {
        let text = "slack = a\n\
             transformer_va = 400000\n\
             base_v = 400\n\
             vmin = 0.95\n\
             vmax = 1.05\n\
             [buses]\na\nb\nc\n\
             [lines]\n\
             a, b, 0.01, 0.01\n\
             b, c, 0.01, 0.01\n\
             c, a, 0.01, 0.01\n";
        match parse_network(text) {
            Err(Error::Topology(_)) => {}
            other => panic!("expected TopologyError, got {other:?}"),
        }
    }

    #[test]
    fn disconnected_graph_is_rejected() {
        // 4 buses, 3 lines, but one edge duplicated: a cycle a-b plus island d.
        let text = "slack = a\n\
             transformer_va = 400000\n\
             base_v = 400\n\
             vmin = 0.95\n\
             vmax = 1.05\n\
             [buses]\na\nb\nc\nd\n\
             [lines]\n\
             a, b, 0.01, 0.01\n\
             b, a, 0.01, 0.01\n\
             c, d, 0.01, 0.01\n";
        assert!(matches!(parse_network(text), Err(Error::Topology(_))));
    }

    #[test]
    fn negative_impedance_is_rejected() {
        let text = two_bus_text().replace("0.0097", "-0.0097");
        assert!(matches!(parse_network(&text), Err(Error::Value(_))));
    }

    #[test]
    fn inverted_voltage_band_is_rejected() {
        let text = two_bus_text()
            .replace("vmin = 0.95", "vmin = 1.06")
            .replace("vmax = 1.05", "vmax = 1.05");
        assert!(matches!(parse_network(&text), Err(Error::Value(_))));
    }

    #[test]
    fn duplicate_load_attachment_is_rejected() {
        let text = two_bus_text().replace("bus1, load1\n", "bus1, load1\nbus1, load2\n");
        assert!(matches!(parse_network(&text), Err(Error::Topology(_))));
    }

    #[test]
    fn network_round_trips() {
        let (spec, inv) = parse_network(two_bus_text()).unwrap();
        let (spec2, inv2) = parse_network(&serialize_network(&spec, &inv)).unwrap();
        assert_eq!(spec, spec2);
        assert_eq!(inv, inv2);
    }

    #[test]
    fn timeseries_round_trips_through_csv() {
        let (spec, _) = parse_network(two_bus_text()).unwrap();
        let csv = "t, load_p:load1, load_q:load1, pv_p:pv1\n\
                   0, 100, 30, 0\n\
                   1, 200, 60, 500\n\
                   2, 150, 45, 1200.5\n\
                   3, 50, 15, 0\n";
        let set = parse_timeseries(csv, &spec).unwrap();
        assert_eq!(set.n_steps, 4);
        assert_eq!(set.load_p_w[0], vec![100.0, 200.0, 150.0, 50.0]);
        assert_eq!(set.pv_p_avail_w[0][2], 1200.5);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("profiles.csv");
        save_timeseries(&path, &spec, &set).unwrap();
        let set2 = load_timeseries(&path, &spec).unwrap();
        assert_eq!(set, set2);
    }

    #[test]
    fn missing_load_column_is_shape_error() {
        let (spec, _) = parse_network(two_bus_text()).unwrap();
        let csv = "t, load_p:load1, pv_p:pv1\n0, 100, 0\n";
        assert!(matches!(parse_timeseries(csv, &spec), Err(Error::Shape(_))));
    }

    #[test]
    fn negative_pv_availability_is_value_error() {
        let (spec, _) = parse_network(two_bus_text()).unwrap();
        let csv = "t, load_p:load1, load_q:load1, pv_p:pv1\n0, 100, 30, -1\n";
        assert!(matches!(parse_timeseries(csv, &spec), Err(Error::Value(_))));
    }
}
