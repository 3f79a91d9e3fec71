//! Drives the command-line pipeline from code: self-symmetry run on a generated mesh.
//!
//! cargo run --example cli_run -- out_dir

use maptree::cli::{parse_config, run};
use maptree::mesh::io::write_off;
use maptree::shapes;

fn main() -> maptree::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "selfsym_out".into());
    let input = std::env::temp_dir().join("maptree_example_rectangle.off");
    write_off(&input, &shapes::rectangle(24, 20, 1.22))?;

    let cfg = parse_config([
        "maptree",
        "selfsym",
        input.to_str().expect("utf-8 temp path"),
        "--out",
        &out,
        "--k-final",
        "30",
        "--samples",
        "200",
    ])?;
    let manifest = run(&cfg)?;
    for m in &manifest.maps {
        println!("{} -> {}", m.map_file, m.report_file);
    }
    println!("{}", serde_json::to_string_pretty(&manifest.extra).expect("json"));
    Ok(())
}
