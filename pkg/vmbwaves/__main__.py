from vmbwaves.cli import app

app()
