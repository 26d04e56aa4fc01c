//! The proximity operators behind the solver steps.

use mpga::prox::{
    k_norm, project_knorm_dual_ball, project_l2_ball, prox_conj_via_moreau, prox_knorm, prox_l1_box, BoxBounds,
};

fn main() {
    let bounds = BoxBounds::symmetric(4, 1.0).unwrap();
    let v = [2.0, 0.3, -0.7, -5.0];
    println!("prox of 0.5|.|_1 + box at {v:?}: {:?}", prox_l1_box(&v, 0.5, &bounds));

    println!("projection of (3, 4) onto the l2 ball: {:?}", project_l2_ball(&[3.0, 4.0]));

    let z = [3.0, -1.0, 0.5, 2.0];
    for k in 1..=4 {
        let p = prox_knorm(&z, 1.0, k).unwrap();
        println!("prox of ||.||_({k}) at {z:?}: {p:?}  (K-norm of z = {})", k_norm(&z, k));
    }

    // The conjugate of the K-norm is the indicator of
    // {||u||_inf <= 1, ||u||_1 <= K}; its prox is a projection for any step.
    let k = 2;
    let alpha = 10.0;
    let direct = project_knorm_dual_ball(&z, k).unwrap();
    let moreau = prox_conj_via_moreau(&z, alpha, |w, s| prox_knorm(w, s, k).unwrap());
    println!("dual-ball projection {direct:?}");
    println!("Moreau route         {moreau:?}");
}
