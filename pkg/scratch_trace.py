# Inspect acc_ul dynamics during top-k fine-tune + model-capacity grid.
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


cfg_train = unlearn.UnlearnConfig(lam=0.0, max_epochs=250, batch_size=64,
                                  learning_rate=1e-3, patience=15, min_delta=0.0002)

for hidden in ([64, 64], [32, 24]):
    for sf in (1.25, 1.4):
        ds = make_blobs(10, 500, 32, 0.5, 1234, sf)
        net0 = nn.init_random([32] + hidden + [10], seed=0)
        src, ep, _ = unlearn.train_source(net0, ds, cfg_train, seed=0)
        tr_acc = metrics.accuracy(src, ds.features, ds.labels)
        sp = data.split(ds, 0.05, 0)
        X_ul, y_ul = ds.features[sp.unlearn_indices], ds.labels[sp.unlearn_indices]
        b = metrics.accuracy(src, X_ul, y_ul)
        probe = unlearn.pick_sensitivity_sample(ds, 0)
        sens = unlearn.sensitivity(src, ds.features[probe:probe+1], ds.labels[probe:probe+1])
        for eps in (1.0, -0.9):
            plan = unlearn.select_top_k(sens, 45, eps)
            ucfg = unlearn.UnlearnConfig(epsilon=eps, max_epochs=40)
            out = unlearn.unlearn_finetune(src, ds, sp, ucfg, plan, seed=0)
            trace_ul = [f"{u:.3f}" for _, u in out.acc_trace]
            trace_re = [f"{r:.3f}" for r, _ in out.acc_trace]
            print(f"hidden={hidden} sf={sf} tr_acc={tr_acc:.4f} N={nn.param_count(src)} "
                  f"eps={eps}: acc_ul {b:.3f} -> {out.acc_ul:.3f}")
            print(f"   ul trace: {trace_ul}")
            print(f"   re trace: {trace_re}")
