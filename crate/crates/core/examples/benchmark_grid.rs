//! Drive the `benchmark` command on the bundled images: every image x subrate
//! x design, plus the per-design gap sheet relative to q=inf.

use std::path::PathBuf;

fn main() {
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data");
    let out = std::env::temp_dir().join("hodw_benchmark.csv");
    let args = [
        "hodw",
        "benchmark",
        data.to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
        "--subrates",
        "0.2,0.3",
        "--crop",
        "32",
        "--iters",
        "5",
        "--init",
        "smooth",
    ];
    let code = hodw::cli::run_from(args);
    if code != 0 {
        std::process::exit(code);
    }
    print!("{}", std::fs::read_to_string(&out).unwrap());
    println!();
    print!("{}", std::fs::read_to_string(out.with_file_name("hodw_benchmark_delta.csv")).unwrap());
}
