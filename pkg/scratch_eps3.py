# Harden the r=0.05 top-k cell: eps 1.5 / 1.75 / 2.0 with warm-start margins.
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

for eps in (1.5, 1.75, 2.0):
    for ratio in (0.05, 0.2):
        b, a, ep_, ces, cer = [], [], [], [], []
        rt_ep = []
        for seed in range(5):
            src = sources[seed]
            sp = data.split(ds, ratio, seed)
            X_ul, y_ul = ds.features[sp.unlearn_indices], ds.labels[sp.unlearn_indices]
            X_re, y_re = ds.features[sp.remain_indices], ds.labels[sp.remain_indices]
            b.append(metrics.accuracy(src, X_ul, y_ul))
            probe = unlearn.pick_sensitivity_sample(ds, seed)
            sens = unlearn.sensitivity(src, ds.features[probe:probe+1],
                                       ds.labels[probe:probe+1])
            plan = unlearn.select_top_k(sens, 45, eps)
            store = nn.ParameterStore.from_network(src)
            pn = src.copy(); unlearn.perturb(store, plan).apply_to(pn)
            ces.append(nn.cross_entropy(pn, X_re, y_re))
            cer.append(nn.cross_entropy(nn.init_random(src.dims(), seed + 1000),
                                        X_re, y_re))
            ucfg = unlearn.UnlearnConfig(epsilon=eps, patience=3, min_delta=0.002,
                                         learning_rate=2e-3)
            out = unlearn.unlearn_finetune(src, ds, sp, ucfg, plan, seed=seed)
            a.append(out.acc_ul); ep_.append(out.epochs_run)
            bcfg = unlearn.UnlearnConfig(lam=0.0, learning_rate=1e-3,
                                         patience=3, min_delta=0.002)
            rt = unlearn.run_baseline("retrain", src, ds, sp, bcfg, seed=seed)
            rt_ep.append(rt.epochs_run)
        print(f"eps={eps} r={ratio}: after={['%.4f' % x for x in a]} "
              f"n_drop={sum(1 for x, y in zip(a, b) if x < y)}/5 "
              f"maxCEp={max(ces):.3f} minCEr={min(cer):.3f} "
              f"ep={ep_} rt={rt_ep} "
              f"ep_ok={sum(1 for t, r in zip(ep_, rt_ep) if t <= r)}/5")
