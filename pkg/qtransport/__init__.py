from flask import Flask
from qtransport.config import Config
from qtransport.logger import configure_logging


def create_app():
    app = Flask(__name__)
    app.config.from_object(Config)

    # Setup logging
    configure_logging()

    # Register Blueprints
    from qtransport.routes import bp as pipeline_bp
    app.register_blueprint(pipeline_bp)

    return app
