"""The numerical core of spatial_sieve.

Nothing in here touches the filesystem or the command line, so every
module can be used as a plain library.
Currently, this package contains the following modules:
    - spatial_sieve.stats.basis: tensor-product B-spline sieves
    - spatial_sieve.stats.design: sampling regions, densities and sites
    - spatial_sieve.stats.fields: Levy-driven moving-average fields
    - spatial_sieve.stats.truths: regression functions for simulations
    - spatial_sieve.stats.estimator: the ridge series estimators
    - spatial_sieve.stats.neighbors: close site pairs by grid bucketing
    - spatial_sieve.stats.inference: variance estimates and intervals
    - spatial_sieve.stats.experiments: Monte Carlo rate and coverage studies

Typical usage example:
    ```py
    from spatial_sieve.stats import basis, design, estimator
    sites = design.rescale_sites(raw, [102, 74])
    fit = estimator.fit_trend(sites, y, basis.basis_for_dimension(900, 2, 3), 0.5 / sites.n)
    ```
"""
# License: EPL-2.0
# SPDX-License-Identifier: EPL-2.0
# Copyright (c) 2024-present The spatial-sieve Contributors
