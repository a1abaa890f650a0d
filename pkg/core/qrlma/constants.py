import os

from qrlma_lib import parallel


class QrlmaConstant:
    """Files"""

    PROJECT_FILE = "qrlma.yml"
    DOTENV_FILE = ".env"
    MANIFEST_SUFFIX = ".manifest.json"

    """ Study outputs """
    ENSEMBLE_FILE = "ensemble.csv"
    SUMMARY_FILE = "summary.csv"
    STATISTICS_FILE = "statistics.json"
    MANIFEST_FILE = "manifest.json"

    """ Environment """
    LOG_FORMAT_ENV = "QRLMA_LOG_FORMAT"
    THREADS_ENV = parallel.THREADS_ENV

    @staticmethod
    def manifest_path(output_path: str) -> str:
        root, _ = os.path.splitext(output_path)
        return root + QrlmaConstant.MANIFEST_SUFFIX
