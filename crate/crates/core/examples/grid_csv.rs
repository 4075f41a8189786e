//! A configured grid run end to end: parse, run, CSV and summary table.

use optimism::experiment::{csv_string, report_summary, run_grid, ExperimentConfig};

const CONFIG: &str = "
mode = compare
k = 0, 0.5, 1
sigma2 = 0.05
model = ols, ridge, bended
lambda = 0.1
n_train = 200
num_runs = 300
seed = 17
";

fn main() -> optimism::Result<()> {
    let cfg = ExperimentConfig::parse(CONFIG)?;
    let rows = run_grid(&cfg)?;
    print!("{}", csv_string(&rows)?);
    println!();
    print!("{}", report_summary(&rows)?);
    Ok(())
}
