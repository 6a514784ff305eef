"""Default run configuration, one dict per config-file section.

The type of every default decides how the file value is coerced.
"""

RUN_CONFIG = {
    'method': 'edde',
    'seed': 0,
    'output_dir': 'runs/default',
    'report_formats': 'json,csv',
    'log_level': 'INFO',
}

DATA_CONFIG = {
    'source': 'blobs',
    'train_path': '',
    'test_path': '',
    'label_column': 'label',
    'images_path': '',
    'labels_path': '',
    'test_images_path': '',
    'test_labels_path': '',
    'limit': 1000,
    'n_per_class': 200,
    'k': 3,
    'd': 2,
    'spread': 1.0,
    'test_fraction': 0.25,
    'normalize': True,
}

MODEL_CONFIG = {
    'hidden': '16,16',
    'activation': 'relu',
}

TRAIN_CONFIG = {
    'lr0': 0.1,
    'schedule': 'step',
    'cycles': 1,
    'batch_size': 64,
    'epochs_first': 20,
    'epochs_rest': 10,
    'epochs_per_model': 20,
}

EDDE_CONFIG = {
    'T': 5,
    'gamma': 0.1,
    'beta': 'auto',
}

BETA_SEARCH_CONFIG = {
    'n_folds': 6,
    'probe_epochs': 5,
    'beta_step': 0.1,
    'gap_tolerance': 0.01,
    'teacher_epochs': 20,
    'student_epochs': 10,
}

BASELINE_CONFIG = {
    'lambda_nc': 2.0,
    'label_mix': 0.0,
}

COMPARE_CONFIG = {
    'methods': ('single,bagging,adaboost_m1,adaboost_nc,adaboost_nc_transfer,snapshot,bans,'
                'edde,edde_normal_loss,edde_transfer_all,edde_transfer_none'),
    'budget': 60,
}

SWEEP_CONFIG = {
    'gammas': '0,0.05,0.1,0.2,0.5,1',
}

DEFAULT_CONFIG = {
    'run': RUN_CONFIG,
    'data': DATA_CONFIG,
    'model': MODEL_CONFIG,
    'train': TRAIN_CONFIG,
    'edde': EDDE_CONFIG,
    'beta_search': BETA_SEARCH_CONFIG,
    'baseline': BASELINE_CONFIG,
    'compare': COMPARE_CONFIG,
    'sweep': SWEEP_CONFIG,
}
