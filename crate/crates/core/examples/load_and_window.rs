//! Round-trips a returns panel through CSV, cuts a train/test window and
//! demeans the training slice.
//!
//! ```text
//! cargo run --release --example load_and_window [path/to/returns.csv]
//! ```

use covcraft::{
    build_population, demean, load_panel, sample_panel, save_panel, slice_window, SpikeSpec, WindowSpec,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let panel = match std::env::args().nth(1) {
        Some(path) => load_panel(path)?,
        None => {
            // no file given: write a synthetic panel to a temp dir and read it back
            let spec = SpikeSpec::null(12, 1e-4).with_spike(4.0, None);
            let generated = sample_panel(&build_population(&spec)?, 260, &spec, 1)?;
            let dir = tempfile::tempdir()?;
            let path = dir.path().join("returns.csv");
            save_panel(&generated, &path)?;
            let loaded = load_panel(&path)?;
            assert_eq!(loaded.assets(), generated.assets());
            println!("wrote and re-read {}", path.display());
            loaded
        }
    };
    println!(
        "{} assets x {} days, {} .. {}",
        panel.n_assets(),
        panel.n_days(),
        panel.dates()[0],
        panel.dates()[panel.n_days() - 1]
    );

    let train_len = (panel.n_days() * 3 / 4).max(2);
    let window = WindowSpec::new(0, train_len, panel.n_days() - train_len);
    let (train, test) = slice_window(&panel, window)?;
    println!(
        "train {} days (c = M/N = {:.3}), test {} days starting {}",
        train.n_days(),
        train.dimensionality(),
        test.n_days(),
        test.dates()[0]
    );

    let (centered, means) = demean(&train);
    for (name, mean) in train.assets().iter().zip(&means).take(5) {
        println!("  {name:<8} mean daily return {mean:+.6}");
    }
    let residual = centered.row_means().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    println!("largest row mean after demeaning: {residual:.1e}");
    Ok(())
}
