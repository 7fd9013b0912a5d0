use novqe::ansatz::build_product;
use novqe::hamiltonian::{build_hubbard, HubbardSpec};
use novqe::noization::noization_loop;
use novqe::simulator::NoiseModel;
use novqe::vqe::ShotBudget;

fn main() {
    let spec = HubbardSpec::chain(2, 1.0, 0.0).with_mu(0.0);
    let h = build_hubbard(&spec).unwrap();
    let tpl = build_product(4);
    let budget = ShotBudget::exact(1000, 10);
    let mut winners = Vec::new();
    for seed in 0..40u64 {
        let trace = noization_loop(&h, &tpl, 3, &budget, &NoiseModel::off(), seed).unwrap();
        let last = trace.final_energy().unwrap();
        let err = (last + 2.0).abs();
        if err < 1e-4 {
            winners.push((seed, err));
        }
    }
    println!("winners (err < 1e-4 at K=3): {winners:?}");
}
