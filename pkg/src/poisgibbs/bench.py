"""Backend benchmark: the same chain on the numba and numpy kernel paths.

Times the full Gibbs sweep (the latent-count partitioning dominates on
deblurring).  The integer stream layer matches across backends exactly
and single draws agree to last-ulp libm differences, but those ulps
compound chaotically over many sweeps, so completed chains are compared
statistically: both posterior means must reconstruct the same truth to
within Monte Carlo noise.
"""

import time

import numpy as np

from . import backend
from .experiments import generate_observation, shepp_logan_phantom
from .operators import ConvolutionOperator, gaussian_kernel, identity_operator
from .priors import SmoothedTVPrior
from .rngdist import KIND_OBSERVE, RandomStream
from .sampler import PoissonModel, SamplerConfig, run_chain


def _setup(size, task, seed):
    truth = shepp_logan_phantom(max(32, size)).data[0]
    if size < 32:
        truth = truth[:size, :size]
    shape = truth.shape
    if task == "deblur":
        op = ConvolutionOperator(gaussian_kernel(13, 1.6), shape)
    else:
        op = identity_operator(truth.size)
    stream = RandomStream(seed).substream(KIND_OBSERVE)
    y = generate_observation(truth.ravel(), op, 40.0, stream)
    model = PoissonModel(y, 40.0, op)
    prior = SmoothedTVPrior(12.0, 0.01, shape)
    return model, prior


def run_bench(size=32, sweeps=200, task="deblur", seed=0):
    model, prior = _setup(size, task, seed)
    cfg = SamplerConfig(rho=0.01, gamma_step=2e-3, n_mc=sweeps,
                        n_bi=sweeps // 2, seed=seed, inner_steps=5, thin=10)
    results = {}
    names = ["numpy"] + (["numba"] if backend.numba_available() else [])
    for name in names:
        with backend.force_backend(name):
            if name == "numba":
                # compile outside the timed region
                warm = SamplerConfig(rho=0.01, gamma_step=2e-3, n_mc=2,
                                     n_bi=1, seed=seed, inner_steps=1)
                run_chain(model, prior, warm)
            t0 = time.perf_counter()
            summary, diag = run_chain(model, prior, cfg)
            elapsed = time.perf_counter() - t0
        results[name] = (elapsed, summary.mean.copy())
        print(f"{name:>6}: {elapsed:8.3f}s total, "
              f"{elapsed / sweeps * 1e3:7.2f} ms/sweep "
              f"({task}, {size}x{size}, {sweeps} sweeps)")
    if len(results) == 2:
        t_py, mean_py = results["numpy"]
        t_nb, mean_nb = results["numba"]
        scale = float(np.mean(mean_py))
        rms = float(np.sqrt(np.mean((mean_nb - mean_py) ** 2))) / scale
        print(f"speedup numba vs numpy: {t_py / t_nb:.2f}x")
        print(f"posterior-mean relative RMS difference: {rms:.3e}")
        agree = rms < 0.05  # within Monte Carlo noise of two chain realizations
        print("backends statistically agree" if agree
              else "WARNING: backends disagree beyond Monte Carlo noise")
        return {"speedup": t_py / t_nb, "rel_rms_diff": rms, "agree": agree}
    return {"speedup": None, "rel_rms_diff": 0.0, "agree": True}
