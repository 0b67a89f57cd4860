//! Check the calibrated models against the acceptance tolerances.
//!
//! ```text
//! cargo run --example validate
//! ```

use gpm::validate::validate;
use gpm::{DataDir, Tolerances};

fn main() -> gpm::Result<()> {
    let data = DataDir::from_env();
    let (catalog, store) = data.load()?;
    let tol = Tolerances::load(data.tolerances_path())?;

    let result = validate(&catalog, &store, &tol)?;
    for c in &result.criteria {
        println!("{c}");
    }
    let failed: Vec<u8> = result.criteria.iter().filter(|c| !c.pass).map(|c| c.id).collect();
    println!("{} of {} criteria pass; failing: {failed:?}", result.criteria.len() - failed.len(), result.criteria.len());
    Ok(())
}
