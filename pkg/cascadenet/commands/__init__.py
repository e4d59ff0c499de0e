"""Built-in cascadenet CLI commands."""
