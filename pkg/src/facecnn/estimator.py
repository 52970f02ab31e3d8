"""scikit-learn compatible wrappers.

``CNNClassifier`` trains the network with the two-phase protocol and
exposes ``fit`` / ``predict`` / ``decision_function`` / ``score``.
``FacePreprocessor`` turns raw grayscale images into normalized network
inputs so both compose in a :class:`sklearn.pipeline.Pipeline`.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .dataio import TrainingSample, preprocess
from .exceptions import ConfigurationError
from .network import ArchitectureSpec, build, forward_full
from .parallel import WorkerPool
from .trainer import TrainConfig, train_epoch, train_phase1, train_phase2


def _as_images(X, size):
    """Accept ``(n, size, size)`` or flattened ``(n, size*size)`` input."""
    if X.ndim == 2:
        if X.shape[1] != size * size:
            raise ValueError(
                f"X has {X.shape[1]} features; expected {size * size} ({size}x{size} images)"
            )
        return X.reshape(-1, size, size)
    if X.shape[1:] != (size, size):
        raise ValueError(f"images are {X.shape[1:]}, expected {(size, size)}")
    return X


class FacePreprocessor(TransformerMixin, BaseEstimator):
    """Block-average raw 0..255 images down to ``target_size`` and map
    them onto [-1, 1]. Stateless."""

    def __init__(self, target_size=32):
        self.target_size = target_size

    def fit(self, X, y=None):
        X = check_array(X, allow_nd=True, dtype=np.float64)
        if X.ndim != 3:
            raise ValueError("FacePreprocessor expects an (n, rows, cols) image stack")
        self.n_features_in_ = X.shape[1] * X.shape[2]
        return self

    def transform(self, X):
        X = check_array(X, allow_nd=True, dtype=np.float64)
        if X.ndim != 3:
            raise ValueError("FacePreprocessor expects an (n, rows, cols) image stack")
        return np.stack([preprocess(img, self.target_size) for img in X])


class CNNClassifier(ClassifierMixin, BaseEstimator):
    """Seven-layer convolutional network trained by batch gradient descent.

    Parameters
    ----------
    input_size, conv1_kernels, kernel1_size, pool1_window, conv2_kernels,
    kernel2_size, pool2_window, hidden_units : int
        Architecture; defaults give the 32x32 face network.
    num_classes : int or None
        Output neurons. ``None`` uses the number of classes seen in ``fit``.
    learning_rate : float
        Step applied to the gradient summed over the whole training set.
    max_epochs : int
        Epoch budget for each training phase.
    error_threshold : int or None
        ``None`` trains until the training error plateaus (phase 1).
        An integer trains until the error is at most this value (phase 2).
    plateau_window : int
        Consecutive identical epoch errors that count as a plateau.
    n_workers : int
        Threads computing gradients; results do not depend on it.
    random_state : int
        Seed for weight initialization.

    Attributes
    ----------
    classes_ : ndarray
    params_ : NetworkParams
    curve_ : list of EpochRecord
    plateau_error_, plateau_reached_ : set after phase 1
    success_, elapsed_ms_ : set after phase 2
    """

    def __init__(
        self,
        input_size=32,
        conv1_kernels=6,
        kernel1_size=5,
        pool1_window=2,
        conv2_kernels=16,
        kernel2_size=5,
        pool2_window=2,
        hidden_units=170,
        num_classes=None,
        learning_rate=0.001,
        max_epochs=100,
        error_threshold=None,
        plateau_window=4,
        n_workers=1,
        random_state=0,
    ):
        self.input_size = input_size
        self.conv1_kernels = conv1_kernels
        self.kernel1_size = kernel1_size
        self.pool1_window = pool1_window
        self.conv2_kernels = conv2_kernels
        self.kernel2_size = kernel2_size
        self.pool2_window = pool2_window
        self.hidden_units = hidden_units
        self.num_classes = num_classes
        self.learning_rate = learning_rate
        self.max_epochs = max_epochs
        self.error_threshold = error_threshold
        self.plateau_window = plateau_window
        self.n_workers = n_workers
        self.random_state = random_state

    def _spec(self, n_classes):
        num_classes = n_classes if self.num_classes is None else self.num_classes
        if num_classes < n_classes:
            raise ConfigurationError(
                f"num_classes={num_classes} but y has {n_classes} classes"
            )
        return ArchitectureSpec(
            self.input_size,
            self.conv1_kernels,
            self.kernel1_size,
            self.pool1_window,
            self.conv2_kernels,
            self.kernel2_size,
            self.pool2_window,
            self.hidden_units,
            num_classes,
        )

    def fit(self, X, y):
        X, y = check_X_y(X, y, allow_nd=True, dtype=np.float64)
        check_classification_targets(y)
        X = _as_images(X, self.input_size)
        self.classes_, encoded = np.unique(y, return_inverse=True)
        spec = self._spec(len(self.classes_))
        self.n_features_in_ = self.input_size**2
        config = TrainConfig(
            learning_rate=self.learning_rate,
            max_epochs=self.max_epochs,
            error_threshold=self.error_threshold,
            plateau_window=self.plateau_window,
            seed=self.random_state,
        )
        dataset = [TrainingSample(img, int(label)) for img, label in zip(X, encoded)]
        params = build(spec, seed=self.random_state)

        if self.n_workers > 1:
            pool = WorkerPool(self.n_workers)

            def epoch_fn(p, data, lr, epoch=0):
                return pool.epoch(p, data, lr, epoch)
        else:
            pool = None
            epoch_fn = train_epoch
        try:
            if self.error_threshold is None:
                result = train_phase1(params, dataset, config, epoch_fn=epoch_fn)
                self.plateau_error_ = result.plateau_error
                self.plateau_reached_ = result.plateau_reached
            else:
                result = train_phase2(params, dataset, config, epoch_fn=epoch_fn)
                self.success_ = result.success
                self.elapsed_ms_ = result.elapsed_ms
        finally:
            if pool is not None:
                pool.close()
        self.curve_ = result.curve
        self.params_ = params
        return self

    def decision_function(self, X):
        """Raw tanh outputs, one column per class in ``classes_``."""
        check_is_fitted(self, "params_")
        X = check_array(X, allow_nd=True, dtype=np.float64)
        X = _as_images(X, self.input_size)
        outputs = np.stack([forward_full(self.params_, img)[1] for img in X])
        return outputs[:, : len(self.classes_)]

    def predict(self, X):
        scores = self.decision_function(X)
        return self.classes_[np.argmax(scores, axis=1)]
