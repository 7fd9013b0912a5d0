use novqe::experiment::*;
use novqe::hamiltonian::HubbardSpec;

fn main() {
    for total in [5_000_000u64, 15_000_000, 50_000_000] {
        let base = ExperimentConfig {
            model: HubbardSpec::chain(2, 1.0, 1.0),
            method: Method::Vqe,
            ansatz: Some("ldca".into()),
            k: None,
            max_ops: None,
            noise: NoiseConfig { enabled: true, r: 0.01 },
            shots: ShotsConfig { exact: false, total: Some(total), n_iter: 1000, n_repeats: 5 },
            seeds: vec![3],
            repeats: 10,
        };
        let fsim = ExperimentConfig {
            method: Method::Noization,
            ansatz: Some("fsim".into()),
            k: Some(3),
            ..base.clone()
        };
        let rows = compare_tradeoff(&fsim, &base, &[0.01, 1.0], std::path::Path::new("/tmp/scan_b")).unwrap();
        for row in rows {
            println!(
                "total {total:>9} r={:<5} fsim {:.4e}  ldca {:.4e}  {}",
                row.r, row.merit_a, row.merit_b,
                if row.merit_a <= row.merit_b { "OK" } else { "x" }
            );
        }
    }
}
