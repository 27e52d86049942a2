# Fixture design search: model capacity x epsilon x stopping schedule.
import numpy as np

from unlearnlab import nn, data, unlearn, metrics

ds = data.generate_blobs(10, 500, 32, 0.5, seed=1234)
SEEDS = (0, 1, 2, 3, 4)


def run_variant(hidden, eps_tk, eps_rk, patience, min_delta, label):
    cfg_train = unlearn.UnlearnConfig(lam=0.0, max_epochs=200, batch_size=64,
                                      learning_rate=1e-3, patience=15, min_delta=0.0002)
    sources = {}
    for seed in SEEDS:
        net0 = nn.init_random([32] + hidden + [10], seed=seed)
        src, ep, _ = unlearn.train_source(net0, ds, cfg_train, seed=seed)
        sources[seed] = src
    tr_accs = [metrics.accuracy(sources[s], ds.features, ds.labels) for s in SEEDS]
    print(f"\n=== {label}: hidden={hidden} N={nn.param_count(sources[0])} "
          f"train_acc={['%.3f' % a for a in tr_accs]}")
    for ratio in (0.05, 0.2):
        for strat, eps in (("top-k", eps_tk), ("random-k", eps_rk)):
            befores, afters, res, eps_run, warm_ok = [], [], [], [], []
            for seed in SEEDS:
                src = sources[seed]
                sp = data.split(ds, ratio, seed)
                X_ul, y_ul = ds.features[sp.unlearn_indices], ds.labels[sp.unlearn_indices]
                X_re, y_re = ds.features[sp.remain_indices], ds.labels[sp.remain_indices]
                befores.append(metrics.accuracy(src, X_ul, y_ul))
                if strat == "top-k":
                    probe = unlearn.pick_sensitivity_sample(ds, seed)
                    sens = unlearn.sensitivity(src, ds.features[probe:probe+1],
                                               ds.labels[probe:probe+1])
                    plan = unlearn.select_top_k(sens, 45, eps)
                else:
                    plan = unlearn.select_random_k(nn.param_count(src), 0.05, seed, eps)
                ucfg = unlearn.UnlearnConfig(epsilon=eps, patience=patience,
                                             min_delta=min_delta)
                out = unlearn.unlearn_finetune(src, ds, sp, ucfg, plan, seed=seed)
                afters.append(out.acc_ul)
                res.append(out.acc_re)
                eps_run.append(out.epochs_run)
                ce_p = nn.cross_entropy(out.model.copy() if False else _apply(src, plan),
                                        X_re, y_re)
                ce_r = nn.cross_entropy(nn.init_random(src.dims(), seed + 1000), X_re, y_re)
                warm_ok.append(ce_p <= ce_r)
            med_b, med_a = np.median(befores), np.median(afters)
            verdict = "DROP" if med_a < med_b else "FLAT"
            print(f"  ratio={ratio} {strat:9s} eps={eps:5}: "
                  f"before={['%.3f' % b for b in befores]} "
                  f"after={['%.3f' % a for a in afters]} med {med_b:.4f}->{med_a:.4f} "
                  f"[{verdict}] acc_re_med={np.median(res):.3f} warm={all(warm_ok)} "
                  f"epochs={eps_run}")
        # retrain reference (one per ratio, for epochs comparison)
        rt_eps = []
        for seed in SEEDS[:3]:
            sp = data.split(ds, ratio, seed)
            bcfg = unlearn.UnlearnConfig(lam=0.0, learning_rate=1e-3,
                                         patience=patience, min_delta=min_delta)
            out = unlearn.run_baseline("retrain", sources[seed], ds, sp, bcfg, seed=seed)
            rt_eps.append((out.epochs_run, round(out.acc_ul, 3)))
        print(f"  ratio={ratio} retrain (3 seeds): epochs/acc_ul={rt_eps}")


def _apply(src, plan):
    store = nn.ParameterStore.from_network(src)
    p = unlearn.perturb(store, plan)
    net = src.copy()
    p.apply_to(net)
    return net


run_variant([64, 64], 1.5, 2.0, 3, 0.002, "big model, strong eps, early stop")
run_variant([20, 16], 0.05, 0.05, 5, 0.001, "small model, default eps")
run_variant([20, 16], 1.0, 1.0, 5, 0.001, "small model, eps 1.0")
