# Final fixture grid: sigma factor x stopping schedule x epsilon.
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

print("--- held-out accuracy vs sigma factor ---")
for sf in (1.2, 1.3):
    ho = make_blobs(10, 625, 32, 0.5, 77, sf)
    tr = data.Dataset(ho.features[:5000], ho.labels[:5000], 10, "standardized")
    for hidden in ([64, 64], [32, 24]):
        m0 = nn.init_random([32] + hidden + [10], seed=1)
        m, ep, _ = unlearn.train_source(m0, tr, cfg_train, seed=1)
        acc_ho = metrics.accuracy(m, ho.features[5000:], ho.labels[5000:])
        print(f"sf={sf} hidden={hidden}: held-out={acc_ho:.4f} (epochs {ep})")

for sf in (1.2, 1.3):
    ds = make_blobs(10, 500, 32, 0.5, 1234, sf)
    sources = {}
    for seed in range(5):
        net0 = nn.init_random([32, 32, 24, 10], seed=seed)
        src, _, _ = unlearn.train_source(net0, ds, cfg_train, seed=seed)
        sources[seed] = src
    tr_acc = [metrics.accuracy(sources[s], ds.features, ds.labels) for s in range(5)]
    print(f"\n### sf={sf} [32,24] train={['%.4f' % a for a in tr_acc]}")
    for patience, delta in ((5, 0.001), (3, 0.002)):
        for ratio in (0.05, 0.1, 0.2):
            rt = {}
            for seed in range(5):
                sp = data.split(ds, ratio, seed)
                bcfg = unlearn.UnlearnConfig(lam=0.0, learning_rate=1e-3,
                                             patience=patience, min_delta=delta)
                o = unlearn.run_baseline("retrain", sources[seed], ds, sp, bcfg, seed=seed)
                rt[seed] = o
            for strat, eps in (("top-k", 1.0), ("top-k", -0.9), ("random-k", 1.0)):
                b, a, re_, ep_, warm, epok = [], [], [], [], [], []
                for seed in range(5):
                    src = sources[seed]
                    sp = data.split(ds, ratio, seed)
                    X_ul, y_ul = ds.features[sp.unlearn_indices], ds.labels[sp.unlearn_indices]
                    X_re, y_re = ds.features[sp.remain_indices], ds.labels[sp.remain_indices]
                    b.append(metrics.accuracy(src, X_ul, y_ul))
                    if strat == "top-k":
                        probe = unlearn.pick_sensitivity_sample(ds, seed)
                        sens = unlearn.sensitivity(src, ds.features[probe:probe+1],
                                                   ds.labels[probe:probe+1])
                        plan = unlearn.select_top_k(sens, 45, eps)
                    else:
                        plan = unlearn.select_random_k(nn.param_count(src), 0.05, seed, eps)
                    store = nn.ParameterStore.from_network(src)
                    pn = src.copy(); unlearn.perturb(store, plan).apply_to(pn)
                    warm.append(nn.cross_entropy(pn, X_re, y_re)
                                <= nn.cross_entropy(nn.init_random(src.dims(), seed + 1000),
                                                    X_re, y_re))
                    ucfg = unlearn.UnlearnConfig(epsilon=eps, patience=patience,
                                                 min_delta=delta)
                    out = unlearn.unlearn_finetune(src, ds, sp, ucfg, plan, seed=seed)
                    a.append(out.acc_ul); re_.append(out.acc_re); ep_.append(out.epochs_run)
                    epok.append(out.epochs_run <= rt[seed].epochs_run)
                med_b, med_a = np.median(b), np.median(a)
                mrr_ok = np.median(re_) >= 0.9 * np.median(
                    [metrics.accuracy(sources[s], ds.features[data.split(ds, ratio, s).remain_indices],
                                      ds.labels[data.split(ds, ratio, s).remain_indices])
                     for s in range(5)])
                print(f"  p={patience}/{delta} r={ratio:4} {strat:9s} eps={eps:5}: "
                      f"{med_b:.4f}->{med_a:.4f} {'DROP' if med_a < med_b else 'FLAT'} "
                      f"n_drop={sum(1 for x, y in zip(a, b) if x < y)}/5 "
                      f"re={np.median(re_):.3f}{'' if mrr_ok else ' MRR-FAIL'} "
                      f"warm={all(warm)} ep={ep_} rt={[rt[s].epochs_run for s in range(5)]} "
                      f"ep_ok={sum(epok)}/5")
