from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env", env_file_encoding="utf-8", env_prefix="PIWB_", extra="ignore"
    )

    # exploration
    budget: int = Field(default=4, ge=0)  # replication unfoldings
    depth: int = Field(default=8, ge=0)  # trace depth
    val_size: int = Field(default=3, ge=1)
    max_pairs: int = Field(default=20_000, ge=1)
    spot_contexts: int = Field(default=20, ge=1)

    # reporting
    output_format: str = "human"
    log_level: str = "WARNING"
    structured_logs: bool = False
    results_dir: str = "./data/corpus_results"


settings = Settings()
