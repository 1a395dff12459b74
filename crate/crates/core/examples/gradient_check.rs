//! Compare analytic encoder gradients with central finite differences.

use skillpanel::encoder::{grad_check, EncoderDims, EncoderParams};
use skillpanel::trainer::{ContrastiveBatch, SampleRef};

fn main() -> skillpanel::Result<()> {
    let dims = EncoderDims {
        vocab: 20,
        embed: 5,
        hidden: 4,
        attn: 4,
        out: 6,
    };
    let params = EncoderParams::init(dims, 0.5, 1)?;
    let batch = ContrastiveBatch {
        sequences: vec![vec![2, 5, 7, 9], vec![3, 4], vec![11, 12, 13], vec![6, 6, 8], vec![15, 2]],
        samples: vec![
            SampleRef {
                sentence: 0,
                positives: vec![1],
                negatives: vec![2, 3, 4],
            },
            SampleRef {
                sentence: 2,
                positives: vec![3],
                negatives: vec![0, 1],
            },
        ],
    };
    for eps in [1e-4, 1e-5, 1e-6] {
        let r = grad_check(&params, &batch, 0.01, eps, usize::MAX, 0)?;
        let (tensor, at) = r.worst.expect("coordinates checked");
        println!(
            "eps={eps:e}: {} coordinates, max relative error {:.2e} at {}[{at}]",
            r.coords_checked,
            r.max_rel_error,
            tensor.name()
        );
    }
    Ok(())
}
