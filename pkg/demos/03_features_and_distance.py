"""Per-trace statistics, PCA, and the Fréchet distance between trace sets.

Computes the nine trace statistics (max, mean, energy, std, skewness,
kurtosis, peak count, autocorrelation skewness/kurtosis), fits PCA on the
8-feature variant, and measures the Fréchet distance between two noise
families -- the number a report's distance table carries.

Run:  python demos/03_features_and_distance.py
"""

import numpy as np

from plcnoise import (
    FEATURE_NAMES,
    Rng,
    dataset1_like_config,
    dataset2_like_config,
    feature_matrix,
    feature_matrix8,
    feature_vector,
    fid,
    gen_fresh,
    gen_pscgm,
    pca_fit,
    pca_project,
    standardize,
)

burst = gen_fresh(dataset2_like_config(), 64, 16384, Rng(5))
regions = gen_pscgm(dataset1_like_config(), 64, 16384, Rng(5))

fv = feature_vector(burst.trace(0), thresh=0.05)
print("one burst trace:")
for name, value in zip(FEATURE_NAMES, fv.as_array()):
    print(f"  {name:14s} {value:+.4g}")

feats_b = feature_matrix(burst)
feats_r = feature_matrix(regions)
print("\nset-level mean / std / median (kurtosis, feature 6):")
for label, feats in (("burst  ", feats_b), ("regions", feats_r)):
    col = feats[:, 5]
    print(f"  {label} {col.mean():7.2f} {col.std():7.2f} {np.median(col):7.2f}")

# PCA on the 8-feature set (peak count excluded), fitted on the burst set
e_b = feature_matrix8(burst)
e_r = feature_matrix8(regions)
pca = pca_fit(e_b)
explained = pca.eigenvalues / pca.eigenvalues.sum()
print(f"\nPCA: first two components explain {100 * explained[:2].sum():.1f}% "
      f"of the burst set's feature variance")
scores_b = pca_project(pca, e_b, k=2)
scores_r = pca_project(pca, e_r, k=2)
print(f"  burst scores centroid   {scores_b.mean(axis=0).round(3)}")
print(f"  regions scores centroid {scores_r.mean(axis=0).round(3)}")

# Fréchet distance in the z-scored feature space (reference = burst set)
stats = (e_b.mean(axis=0), e_b.std(axis=0))
d_self = fid(standardize(e_b, stats), standardize(e_b, stats))
d_cross = fid(standardize(e_b, stats), standardize(e_r, stats))
print(f"\nFréchet distance, burst vs itself:  {d_self:.2e}")
print(f"Fréchet distance, burst vs regions: {d_cross:.2f}")
