# Stopping-schedule tuning for the r=0.05 cell at eps_tk=1.5.
import numpy as np

from unlearnlab import nn, data, unlearn, metrics


def make_blobs(class_count, per_class, dims, spread, seed, sigma_factor):
    rng = np.random.default_rng(seed)
    d_ = rng.normal(size=(class_count, dims))
    d_ /= np.linalg.norm(d_, axis=1, keepdims=True)
    centers = 4.0 * spread * d_
    labels = np.repeat(np.arange(class_count), per_class)
    feats = centers[labels] + rng.normal(scale=sigma_factor * spread,
                                         size=(labels.size, dims))
    order = rng.permutation(labels.size)
    feats, labels = feats[order], labels[order]
    feats = (feats - feats.mean(0)) / feats.std(0)
    return data.Dataset(feats, labels, class_count, scaling="standardized")


ds = make_blobs(10, 500, 32, 0.5, 1234, 1.2)
cfg_train = unlearn.UnlearnConfig(lam=0.0, max_epochs=250, batch_size=64,
                                  learning_rate=1e-3, patience=15, min_delta=0.0002)
sources = {}
for seed in range(5):
    net0 = nn.init_random([32, 48, 32, 10], seed=seed)
    src, _, _ = unlearn.train_source(net0, ds, cfg_train, seed=seed)
    sources[seed] = src

for lr in (2e-3, 3e-3):
    for patience, delta in ((3, 0.002), (2, 0.003)):
        for ratio in (0.05,):
            rt_ep = []
            for seed in range(5):
                sp = data.split(ds, ratio, seed)
                bcfg = unlearn.UnlearnConfig(lam=0.0, learning_rate=1e-3,
                                             patience=patience, min_delta=delta)
                rt = unlearn.run_baseline("retrain", sources[seed], ds, sp,
                                          bcfg, seed=seed)
                rt_ep.append(rt.epochs_run)
            for strat, eps in (("top-k", 1.5), ("random-k", 2.0)):
                b, a, re_, ep_ = [], [], [], []
                for seed in range(5):
                    src = sources[seed]
                    sp = data.split(ds, ratio, seed)
                    X_ul = ds.features[sp.unlearn_indices]
                    y_ul = ds.labels[sp.unlearn_indices]
                    b.append(metrics.accuracy(src, X_ul, y_ul))
                    if strat == "top-k":
                        probe = unlearn.pick_sensitivity_sample(ds, seed)
                        sens = unlearn.sensitivity(src, ds.features[probe:probe+1],
                                                   ds.labels[probe:probe+1])
                        plan = unlearn.select_top_k(sens, 45, eps)
                    else:
                        plan = unlearn.select_random_k(nn.param_count(src), 0.05,
                                                       seed, eps)
                    ucfg = unlearn.UnlearnConfig(epsilon=eps, patience=patience,
                                                 min_delta=delta, learning_rate=lr)
                    out = unlearn.unlearn_finetune(src, ds, sp, ucfg, plan, seed=seed)
                    a.append(out.acc_ul); re_.append(out.acc_re); ep_.append(out.epochs_run)
                print(f"lr={lr} p={patience}/{delta} r={ratio} {strat:9s}: "
                      f"after={['%.4f' % x for x in a]} "
                      f"n={sum(1 for x, y in zip(a, b) if x < y)}/5 "
                      f"re_med={np.median(re_):.3f} ep={ep_} rt={rt_ep} "
                      f"ep_ok={sum(1 for t, r in zip(ep_, rt_ep) if t <= r)}/5")
