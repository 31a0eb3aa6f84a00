"""Topology detection for noisy high-dimensional point clouds.

The pipeline: sample or load a point cloud, pick a distance (spectral
distances on the symmetric kNN graph are the robust choice in high ambient
dimension), run Vietoris-Rips persistence, and score how cleanly the expected
loops and voids stand out of the diagram.
"""

from ._accel import backend_name
from .basedist import (
    AffinityCalibration,
    core_distance,
    correlation_distance,
    dtm,
    dtm_values,
    euclidean,
    fermat,
    finitize,
    geodesic,
    pca_preprocess,
    tsne_graph_distance,
    umap_graph_distance,
)
from .benchcli import (
    DatasetSpec,
    DistanceSpec,
    ExperimentConfig,
    build_distance,
    load_config,
    main,
    run_cell,
    run_sweep,
)
from .dmatrix import DistanceMatrix, read_distance_csv, write_distance_csv
from .knngraph import (
    NeighborGraph,
    connected_components,
    exact_knn,
    laplacians,
    symmetric_knn_graph,
)
from .ripscomplex import (
    PersistenceDiagram,
    PersistenceFeature,
    RepresentativeCycle,
    brute_force_betti,
    enclosing_radius,
    representative_cycle,
    rips_persistence,
    write_diagram_csv,
    read_diagram_csv,
)
from .scoring import (
    ScoreReport,
    apply_threshold,
    hole_detection_score,
    score_diagram,
    widest_gap_score,
)
from .spectral import (
    SpectralDecomposition,
    diffusion_distance,
    diffusion_sq,
    dpt_distance,
    effective_resistance_corrected,
    effective_resistance_naive,
    eigendecompose,
    laplacian_eigenmaps_distance,
    potential_distance,
)
from .synthgen import (
    GenSpec,
    PointCloud,
    add_gaussian_noise,
    add_outliers,
    embed_isometric,
    generate_dataset,
    generate_manifold,
    load_csv,
    mix_seed,
    write_csv,
)

__version__ = "0.1.0"
