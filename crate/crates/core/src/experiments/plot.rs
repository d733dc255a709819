use std::fs;
use std::path::{Path, PathBuf};

use crate::dataset::{TabularDataset, MAJORITY, MINORITY, OVERLAP};
use crate::error::{OrdError, Result};
use crate::generators::{fit_generator, GeneratorConfig};
use crate::oracle_toy::{bayes_label, make_blobs, BlobWorld};
use crate::overlap::{detect_overlap, OverlapConfig};
use crate::seed::derive_seed;

pub const PLOT_COLUMNS: [&str; 6] = ["x", "y", "class", "ord_label", "oracle_label", "wrong_generation"];

/// Point-cloud CSV: binary class, ternary label, Bayes label and whether they disagree.
pub fn plot_csv(d: &TabularDataset, world: &BlobWorld) -> Result<String> {
    if d.n_features() != 2 || world.dim() != 2 {
        return Err(OrdError::invalid("plot data needs a 2D world"));
    }
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(PLOT_COLUMNS)?;
    let x = d.features();
    for (i, (&ord, class)) in d.labels().iter().zip(d.binary_labels()).enumerate() {
        let p = [x[[i, 0]], x[[i, 1]]];
        let oracle = bayes_label(world, &p, world.priors).label;
        w.write_record([
            p[0].to_string(),
            p[1].to_string(),
            class.to_string(),
            ord.to_string(),
            oracle.to_string(),
            u8::from(class != oracle).to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| OrdError::invalid(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("utf-8 csv"))
}

/// Writes `real.csv` and `synthetic_<name>.csv` files under `dir`.
pub fn emit_plot_data(
    dir: impl AsRef<Path>,
    real: &TabularDataset,
    synthetic: &[(String, TabularDataset)],
    world: &BlobWorld,
) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| OrdError::io(dir, e))?;
    let mut written = vec![];
    let mut put = |name: String, d: &TabularDataset| -> Result<()> {
        let p = dir.join(name);
        fs::write(&p, plot_csv(d, world)?).map_err(|e| OrdError::io(&p, e))?;
        written.push(p);
        Ok(())
    };
    put("real.csv".into(), real)?;
    for (name, d) in synthetic {
        put(format!("synthetic_{name}.csv"), d)?;
    }
    Ok(written)
}

/// The toy visualization run: real data relabeled by ORD, synthetic rows from
/// a generator fitted on ternary labels (`ord`) and on binary labels
/// (`baseline`), each matching the real label counts.
pub fn toy_plot_run(
    world: &BlobWorld,
    seed: u64,
    overlap: &OverlapConfig,
    generator: &GeneratorConfig,
) -> Result<(TabularDataset, Vec<(String, TabularDataset)>)> {
    let real = make_blobs(world, seed)?;
    let ocfg = OverlapConfig {
        seed: derive_seed(seed, "overlap", 0),
        ..*overlap
    };
    let (ternary, _) = detect_overlap(&real, &ocfg)?;
    let fit_seed = derive_seed(seed, "generator-fit", 0);
    let sample_seed = derive_seed(seed, "generator-sample", 0);
    let draw = |fit_on: &TabularDataset, labels: &[u8]| -> Result<TabularDataset> {
        let g = fit_generator(generator, fit_on, fit_seed)?;
        let mut parts = vec![];
        for &l in labels {
            let n = fit_on.count_label(l);
            if n > 0 {
                parts.push(g.sample(l, n, sample_seed)?.data);
            }
        }
        let refs: Vec<&TabularDataset> = parts.iter().collect();
        TabularDataset::concat(&refs)
    };
    let ord = draw(&ternary, &[MAJORITY, MINORITY, OVERLAP])?;
    let baseline = draw(&real, &[MAJORITY, MINORITY])?;
    Ok((ternary, vec![("ord".into(), ord), ("baseline".into(), baseline)]))
}
