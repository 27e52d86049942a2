# Degree probe calibration against the final fixture pair (M, M_UL top-k).
import numpy as np

from unlearnlab import nn, data, unlearn, degree, metrics

ds = data.generate_blobs(10, 500, 32, 0.5, 1234)
cfg_train = unlearn.UnlearnConfig(lam=0.0, max_epochs=250, batch_size=64,
                                  learning_rate=1e-3, patience=15, min_delta=0.0002)
net0 = nn.init_random([32, 48, 32, 10], seed=0)
src, _, _ = unlearn.train_source(net0, ds, cfg_train, seed=0)

sp = data.split(ds, 0.05, 0)
X_ul, y_ul = ds.features[sp.unlearn_indices], ds.labels[sp.unlearn_indices]
probe = unlearn.pick_sensitivity_sample(ds, 0)
sens = unlearn.sensitivity(src, ds.features[probe:probe+1], ds.labels[probe:probe+1])
plan = unlearn.select_top_k(sens, 45, 1.5)
ucfg = unlearn.UnlearnConfig(epsilon=1.5, patience=2, min_delta=0.003,
                             learning_rate=2e-3)
out = unlearn.unlearn_finetune(src, ds, sp, ucfg, plan, seed=0)
mul = out.model
print(f"pair: acc_M(DUL)={metrics.accuracy(src, X_ul, y_ul):.4f} "
      f"acc_MUL(DUL)={metrics.accuracy(mul, X_ul, y_ul):.4f}")

for dmax in (0.25, 0.5, 1.0):
    for epochs in (20, 40):
        cfg = degree.DegreeConfig(eta=0.03, epochs=epochs, batch_size=64,
                                  delta_max=dmax, tau=0.05, learning_rate=1e-3,
                                  hidden=32, bottleneck=16, seed=0)
        gen, trace = degree.train_generator(src, mul, X_ul, y_ul, cfg, None)
        rep = degree.evaluate_degree(src, mul, gen, ds, sp, cfg.tau, trace)
        noise = degree.generator_noise(gen, X_ul)
        print(f"dmax={dmax} ep={epochs}: degree={rep.degree:+.4f} "
              f"constraint={rep.constraint_satisfied} "
              f"accM(Dp)={rep.acc_m_on_dp:.4f} accM(DUL)={rep.acc_m_on_dul:.4f} "
              f"accMUL(Dp)={rep.acc_mul_on_dp:.4f} max|noise|={np.abs(noise).max():.4f} "
              f"loss0={trace[0]:.3f} lossT={trace[-1]:.3f}")
