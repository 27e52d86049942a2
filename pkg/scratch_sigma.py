# Harder-dataset variant: noise std sigma_factor * spread (centers still 4*spread).
import numpy as np

from unlearnlab import nn, data, unlearn, metrics


def make_blobs(class_count, per_class, dims, spread, seed, sigma_factor):
    rng = np.random.default_rng(seed)
    directions = rng.normal(size=(class_count, dims))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    centers = 4.0 * spread * directions
    labels = np.repeat(np.arange(class_count), per_class)
    feats = centers[labels] + rng.normal(scale=sigma_factor * spread,
                                         size=(labels.size, dims))
    order = rng.permutation(labels.size)
    feats, labels = feats[order], labels[order]
    feats = (feats - feats.mean(0)) / feats.std(0)
    return data.Dataset(feats, labels, class_count, scaling="standardized")


for sf in (1.25, 1.5):
    ds = make_blobs(10, 500, 32, 0.5, 1234, sf)
    cfg_train = unlearn.UnlearnConfig(lam=0.0, max_epochs=200, batch_size=64,
                                      learning_rate=1e-3, patience=15, min_delta=0.0002)
    # held-out
    ho = make_blobs(10, 625, 32, 0.5, 77, sf)
    tr = data.Dataset(ho.features[:5000], ho.labels[:5000], 10, "standardized")
    m0 = nn.init_random([32, 64, 64, 10], seed=1)
    m, ep, _ = unlearn.train_source(m0, tr, cfg_train, seed=1)
    acc_ho = metrics.accuracy(m, ho.features[5000:], ho.labels[5000:])
    print(f"\n### sigma_factor={sf}: held-out={acc_ho:.4f} (epochs {ep})")

    sources = {}
    for seed in range(5):
        net0 = nn.init_random([32, 64, 64, 10], seed=seed)
        src, ep, _ = unlearn.train_source(net0, ds, cfg_train, seed=seed)
        sources[seed] = src
    tr_acc = [metrics.accuracy(sources[s], ds.features, ds.labels) for s in range(5)]
    print(f"train_acc={['%.4f' % a for a in tr_acc]}")

    for ratio in (0.05, 0.1, 0.15, 0.2):
        retrain_ep = {}
        for seed in range(5):
            sp = data.split(ds, ratio, seed)
            bcfg = unlearn.UnlearnConfig(lam=0.0, learning_rate=1e-3)
            out = unlearn.run_baseline("retrain", sources[seed], ds, sp, bcfg, seed=seed)
            retrain_ep[seed] = (out.epochs_run, out.wall_time_s, out.acc_ul)
        for strat, eps in (("top-k", 1.0), ("random-k", 1.0)):
            b, a, re_, ep_, warm, accel_ok = [], [], [], [], [], []
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
                ce_p = nn.cross_entropy(pn, X_re, y_re)
                ce_r = nn.cross_entropy(nn.init_random(src.dims(), seed + 1000), X_re, y_re)
                warm.append(ce_p <= ce_r)
                ucfg = unlearn.UnlearnConfig(epsilon=eps)
                out = unlearn.unlearn_finetune(src, ds, sp, ucfg, plan, seed=seed)
                a.append(out.acc_ul); re_.append(out.acc_re); ep_.append(out.epochs_run)
                accel_ok.append(out.epochs_run <= retrain_ep[seed][0]
                                and out.wall_time_s < retrain_ep[seed][1])
            med_b, med_a = np.median(b), np.median(a)
            print(f"  r={ratio:4} {strat:9s} eps={eps}: med {med_b:.4f}->{med_a:.4f} "
                  f"{'DROP' if med_a < med_b else 'FLAT'} "
                  f"after={['%.3f' % x for x in a]} re_med={np.median(re_):.3f} "
                  f"warm={all(warm)} ep={ep_} rt_ep={[retrain_ep[s][0] for s in range(5)]} "
                  f"ep_ok={sum(accel_ok)}/5")
