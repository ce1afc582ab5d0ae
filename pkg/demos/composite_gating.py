"""Spend the expensive estimator only where it matters.

The cheap estimator samples each contour at 16 points; the accurate one at
400. The composite runs the cheap one on the whole batch and re-estimates
only the candidates that look promising (cheap error below the threshold).
"""

import numpy as np

from polydesign.estimators import CompositeEstimator, ReferenceDistanceEstimator
from polydesign.problems import make_reference, reconstruction_domain
from polydesign.sampler import StandardSampler


def main(seed: int = 1, threshold: float = 0.15):
    rng = np.random.default_rng(seed)
    domain = reconstruction_domain(100.0)
    reference = make_reference(domain, rng)
    cheap = ReferenceDistanceEstimator(reference, domain, samples=16)
    accurate = ReferenceDistanceEstimator(reference, domain, samples=400)
    composite = CompositeEstimator(cheap, accurate, threshold=threshold)

    batch = StandardSampler(domain).sample(200, rng)
    values = composite.estimate(batch)[:, 0]
    print(f"batch of {len(batch)}: cheap calls {cheap.call_counter}, accurate calls {accurate.call_counter}")
    print(f"best value {values.min():.4f}, values under threshold {(values < threshold).sum()}")


if __name__ == "__main__":
    main()
