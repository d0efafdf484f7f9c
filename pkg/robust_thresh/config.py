from __future__ import annotations

from pydantic_settings import BaseSettings, SettingsConfigDict

PACKAGE_VERSION = "0.3.0"


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="ROBUST_THRESH_",
    )

    debug: bool = False

    workers: int = 4
    chunk_size: int = 8192

    stop_param_change: float = 1e-10
    target_tol: float = 1e-8
    step_constant: float = 10.0
    eta_scale: float = 0.1

    relu_restarts: int = 5

    singular_tol: float = 1e-12
    sort_select_limit: int = 100_000
    brute_force_limit: int = 14
    torrent_max_iters: int = 100


settings = Settings()
