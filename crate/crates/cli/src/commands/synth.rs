use std::path::{Path, PathBuf};

use tmpredict_core::synthetic::{generate, synthetic_topology, SyntheticConfig, SyntheticData};
use tmpredict_core::tmdata::write_canonical;

use super::write_file;
use crate::error::Result;

/// Link capacity of the generated topology, in traffic units per interval.
pub const SYNTHETIC_CAPACITY: f64 = 1e7;

/// Paths written by [`cmd_synth`].
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub dataset: PathBuf,
    pub topology: PathBuf,
    pub config: PathBuf,
    pub data: SyntheticData,
}

/// Writes a synthetic dataset with planted regimes, a matching topology and
/// a config that points at both.
pub fn cmd_synth(scfg: &SyntheticConfig, out: &Path) -> Result<SynthOutput> {
    let data = generate(scfg)?;
    let dataset = out.join("synthetic.csv");
    let topology = out.join("synthetic.topo");
    let config = out.join("synthetic.conf");

    let mut buf = Vec::new();
    write_canonical(&data.series, &mut buf)?;
    write_file(&dataset, buf)?;
    write_file(
        &topology,
        synthetic_topology(scfg.node_count, SYNTHETIC_CAPACITY)?.to_text(),
    )?;

    let mut regimes = String::from("flow_id,regime\n");
    for (id, r) in data.regimes.iter().enumerate() {
        regimes.push_str(&format!("{id},{}\n", r.as_str()));
    }
    write_file(&out.join("synthetic_regimes.csv"), regimes)?;

    let conf = format!(
        "# synthetic run, generator seed {}\ndataset = synthetic.csv\nnode_count = {}\ninterval_seconds = {}\ntopology = synthetic.topo\nout = run\n",
        scfg.seed, scfg.node_count, scfg.interval_seconds
    );
    write_file(&config, conf)?;
    Ok(SynthOutput {
        dataset,
        topology,
        config,
        data,
    })
}
